#include "mcgc/graph_weights.hpp"

#include "mcgc/error.hpp"
#include "mcgc/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace mcgc {

namespace {

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double horizontal_penalty(const CentroidVector& ci, const CentroidVector& cj, double d_h, const GraphContext& ctx)
{
  if (ci.horizontal_is_zero() || cj.horizontal_is_zero())
    return 1.0;
  // theta_h > pi/2  <=>  negative dot product
  if (ci.dx * cj.dx + ci.dy * cj.dy >= 0.0)
    return 1.0;
  const double diff = std::hypot(ci.dx - cj.dx, ci.dy - cj.dy);
  return std::exp(-ctx.params.w_h * (ctx.k_h / std::max(d_h, distance_floor)) * diff);
}

double vertical_penalty(const CentroidVector& ci, const CentroidVector& cj, double agh_i, double agh_j, double d_z,
                        const GraphContext& ctx)
{
  if (agh_i == agh_j || sign_of(ci.dz) == sign_of(cj.dz))
    return 1.0;
  const double taller_dz = agh_i > agh_j ? ci.dz : cj.dz;
  if (taller_dz < 0.0)
    return 1.0;
  return std::exp(-ctx.params.w_z * (ctx.k_z / std::max(d_z, distance_floor)) * std::abs(ci.dz - cj.dz));
}

} // namespace

void WeightParams::validate() const
{
  if (!(sigma_xy > 0.0) || !(sigma_z > 0.0) || !(w_h > 0.0) || !(w_z > 0.0))
    throw Error(ErrorKind::Parameter, "sigma_xy, sigma_z, w_h and w_z must all be positive");
}

PairGeometry PairGeometry::between(const Point& a, const Point& b, const CentroidVector& ca, const CentroidVector& cb)
{
  PairGeometry g;
  g.d_h = std::hypot(a.x - b.x, a.y - b.y);
  g.d_z = std::abs(a.z - b.z);
  if (!ca.horizontal_is_zero() && !cb.horizontal_is_zero()) {
    const double dot = ca.dx * cb.dx + ca.dy * cb.dy;
    const double cross = ca.dx * cb.dy - ca.dy * cb.dx;
    g.theta_h = std::atan2(std::abs(cross), dot);
  }
  return g;
}

std::vector<CentroidVector> compute_centroids(const PointCloud& cloud, const AllometrySet& allom)
{
  std::vector<KdTree::Position> pos;
  pos.reserve(cloud.size());
  for (const auto& p : cloud.points)
    pos.push_back({p.x, p.y, p.z});
  const KdTree tree(pos, 3);

  std::vector<CentroidVector> out(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud[i];
    if (!(p.agh > 0.0))
      continue;
    const double radius = allom.cd95.evaluate(p.agh) / 4.0;
    const auto nbrs = tree.radius(pos[i], radius);
    if (nbrs.size() <= 1)
      continue;
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (auto j : nbrs) {
      // offsets relative to p keep the sums well conditioned for UTM coordinates
      sx += cloud[j].x - p.x;
      sy += cloud[j].y - p.y;
      sz += cloud[j].z - p.z;
    }
    const double n = static_cast<double>(nbrs.size());
    out[i] = {sx / n, sy / n, sz / n, nbrs.size() - 1};
  }
  return out;
}

GraphContext make_graph_context(const PointCloud& cloud, const AllometrySet& allom, const WeightParams& params)
{
  params.validate();
  const double top = cloud.max_agh();
  if (!(top > 0.0))
    throw Error(ErrorKind::Degenerate, "graph context needs at least one point above ground");
  GraphContext ctx;
  ctx.params = params;
  ctx.k_h = allom.cd95.evaluate(top) / 2.0;
  ctx.k_z = top / 2.0;
  ctx.centroids = compute_centroids(cloud, allom);
  return ctx;
}

double base_weight(const Point& a, const Point& b, const WeightParams& params)
{
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::exp(-(dx * dx + dy * dy) / (params.sigma_xy * params.sigma_xy)) *
         std::exp(-(dz * dz) / (params.sigma_z * params.sigma_z));
}

double adjusted_weight(double base, const CentroidVector& ci, const CentroidVector& cj, double agh_i, double agh_j,
                       const PairGeometry& geom, const GraphContext& ctx)
{
  return base * horizontal_penalty(ci, cj, geom.d_h, ctx) * vertical_penalty(ci, cj, agh_i, agh_j, geom.d_z, ctx);
}

double pair_weight(const PointCloud& cloud, const GraphContext& ctx, std::size_t i, std::size_t j)
{
  if (i == j)
    return 0.0;
  const Point& a = cloud[i];
  const Point& b = cloud[j];
  const auto geom = PairGeometry::between(a, b, ctx.centroids[i], ctx.centroids[j]);
  return adjusted_weight(base_weight(a, b, ctx.params), ctx.centroids[i], ctx.centroids[j], a.agh, b.agh, geom, ctx);
}

Eigen::MatrixXd weight_matrix(const PointCloud& cloud, const GraphContext& ctx, std::span<const std::size_t> sample,
                              std::size_t max_bytes)
{
  if (sample.empty())
    throw Error(ErrorKind::Parameter, "weight matrix sample must be non-empty");
  const std::size_t rows = sample.size(), cols = cloud.size();
  if (rows > max_bytes / sizeof(double) / std::max<std::size_t>(cols, 1))
    throw Error(ErrorKind::Resource, "weight matrix of " + std::to_string(rows) + " x " + std::to_string(cols) +
                                       " exceeds the memory budget; use a smaller sample fraction");
  for (auto s : sample)
    if (s >= cols)
      throw Error(ErrorKind::Parameter, "sample index out of range");

  const double inv_sxy2 = 1.0 / (ctx.params.sigma_xy * ctx.params.sigma_xy);
  const double inv_sz2 = 1.0 / (ctx.params.sigma_z * ctx.params.sigma_z);
  constexpr double max_exponent = 745.0; // exp underflows to 0 beyond this

  Eigen::MatrixXd w(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t j = 0; j < cols; ++j) {
    const Point& b = cloud[j];
    const CentroidVector& cb = ctx.centroids[j];
    double* col = w.col(static_cast<Eigen::Index>(j)).data();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t i = sample[r];
      if (i == j) {
        col[r] = 0.0;
        continue;
      }
      const Point& a = cloud[i];
      const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
      const double expo = (dx * dx + dy * dy) * inv_sxy2 + dz * dz * inv_sz2;
      if (expo > max_exponent) {
        col[r] = 0.0;
        continue;
      }
      const CentroidVector& ca = ctx.centroids[i];
      const double d_h = std::sqrt(dx * dx + dy * dy);
      col[r] = std::exp(-expo) * horizontal_penalty(ca, cb, d_h, ctx) *
               vertical_penalty(ca, cb, a.agh, b.agh, std::abs(dz), ctx);
    }
  }
  return w;
}

} // namespace mcgc
