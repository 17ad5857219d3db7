#include "mcgc/spectral_cut.hpp"

#include "mcgc/error.hpp"
#include "mcgc/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mcgc {

namespace {

// Relative cut-off below which eigenvalues are treated as zero when forming
// pseudo-inverses and inverse square roots.
constexpr double rank_tolerance = 1e-9;

// Flip each column so its largest-magnitude entry is positive.
void fix_signs(Eigen::MatrixXd& v)
{
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index arg = 0;
    v.col(c).cwiseAbs().maxCoeff(&arg);
    if (v(arg, c) < 0.0)
      v.col(c) *= -1.0;
  }
}

} // namespace

Eigen::MatrixXd normalized_laplacian(const Eigen::MatrixXd& w, double deg_floor)
{
  if (w.rows() != w.cols())
    throw Error(ErrorKind::Contract, "weight matrix must be square");
  const double scale = std::max(w.cwiseAbs().maxCoeff(), 1.0);
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw Error(ErrorKind::Contract, "weight matrix is not symmetric");
  if (w.size() > 0 && w.minCoeff() < 0.0)
    throw Error(ErrorKind::Contract, "weight matrix has negative entries");
  if (w.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw Error(ErrorKind::Contract, "weight matrix must have a zero diagonal");

  const Eigen::VectorXd deg = w.rowwise().sum().cwiseMax(deg_floor);
  const Eigen::VectorXd inv_sqrt = deg.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd l = -w;
  l.diagonal() += deg;
  l = inv_sqrt.asDiagonal() * l * inv_sqrt.asDiagonal();
  return (l + l.transpose()) * 0.5;
}

EigenPairs nystrom_eigs(Eigen::MatrixXd rows, std::span<const std::size_t> landmarks, std::size_t count,
                        double deg_floor)
{
  const Eigen::Index m = rows.rows();
  const Eigen::Index n = rows.cols();
  if (static_cast<Eigen::Index>(landmarks.size()) != m || m == 0)
    throw Error(ErrorKind::Parameter, "landmark list must match the landmark rows");
  if (count == 0 || static_cast<Eigen::Index>(count) > m)
    throw Error(ErrorKind::Parameter, "requested " + std::to_string(count) + " eigenpairs from " +
                                        std::to_string(m) + " landmarks");
  std::vector<bool> is_landmark(static_cast<std::size_t>(n), false);
  for (auto l : landmarks) {
    if (static_cast<Eigen::Index>(l) >= n || is_landmark[l])
      throw Error(ErrorKind::Parameter, "landmarks must be distinct point indices");
    is_landmark[l] = true;
  }

  Eigen::MatrixXd a(m, m);
  for (Eigen::Index s = 0; s < m; ++s)
    a.col(s) = rows.col(static_cast<Eigen::Index>(landmarks[static_cast<std::size_t>(s)]));

  // Landmark degrees are exact row sums.
  const Eigen::VectorXd row_sums = rows.rowwise().sum();
  const Eigen::VectorXd a_r = a.rowwise().sum();
  const Eigen::VectorXd b_r = row_sums - a_r;
  const Eigen::VectorXd d_land = row_sums.cwiseMax(deg_floor);
  const Eigen::VectorXd inv_sqrt_land = d_land.cwiseSqrt().cwiseInverse();

  Eigen::MatrixXd a_norm = inv_sqrt_land.asDiagonal() * a * inv_sqrt_land.asDiagonal();
  a_norm = (a_norm + a_norm.transpose()) * 0.5;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> a_eig(a_norm);
  const Eigen::VectorXd& lam = a_eig.eigenvalues();
  const double lam_max = lam.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::abs(lam(i)) > rank_tolerance * lam_max)
      kept.push_back(i);
  const auto r = static_cast<Eigen::Index>(kept.size());
  if (r == 0)
    throw Error(ErrorKind::Degenerate, "landmark block has no usable spectrum");
  Eigen::MatrixXd u_k(m, r);
  Eigen::VectorXd lam_k(r);
  for (Eigen::Index c = 0; c < r; ++c) {
    u_k.col(c) = a_eig.eigenvectors().col(kept[static_cast<std::size_t>(c)]);
    lam_k(c) = lam(kept[static_cast<std::size_t>(c)]);
  }

  // Degrees of the remaining points: b_c + B^T A^+ b_r, with
  // A^+ = D^-1/2 (normalised A)^+ D^-1/2.
  const Eigen::VectorXd scaled_br = inv_sqrt_land.cwiseProduct(b_r);
  const Eigen::VectorXd apinv_br =
    inv_sqrt_land.cwiseProduct(u_k * (lam_k.cwiseInverse().cwiseProduct(u_k.transpose() * scaled_br)));
  const Eigen::VectorXd q = Eigen::VectorXd::Ones(m) + apinv_br;
  const Eigen::VectorXd ext_deg = rows.transpose() * q;
  Eigen::VectorXd deg(n);
  for (Eigen::Index j = 0; j < n; ++j)
    deg(j) = ext_deg(j);
  for (Eigen::Index s = 0; s < m; ++s)
    deg(static_cast<Eigen::Index>(landmarks[static_cast<std::size_t>(s)])) = row_sums(s);
  const Eigen::VectorXd inv_sqrt_deg = deg.cwiseMax(deg_floor).cwiseSqrt().cwiseInverse();

  // Normalise in place: rows become D_land^-1/2 W D^-1/2.
  rows = inv_sqrt_land.asDiagonal() * rows * inv_sqrt_deg.asDiagonal();

  // One-shot orthogonalisation. With S = U |Lambda|^-1/2 and J = sign(Lambda),
  // the extension is G J G^T for G = C S, C = rows^T.
  const Eigen::MatrixXd s = u_k * lam_k.cwiseAbs().cwiseSqrt().cwiseInverse().asDiagonal();
  const Eigen::VectorXd j_sign = lam_k.unaryExpr([](double v) { return v > 0.0 ? 1.0 : -1.0; });

  Eigen::MatrixXd ctc = Eigen::MatrixXd::Zero(m, m);
  ctc.selfadjointView<Eigen::Lower>().rankUpdate(rows);
  ctc = ctc.selfadjointView<Eigen::Lower>();
  Eigen::MatrixXd p = s.transpose() * ctc * s;
  p = (p + p.transpose()) * 0.5;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> p_eig(p);
  const Eigen::VectorXd& sigma = p_eig.eigenvalues();
  const double sigma_max = sigma.maxCoeff();
  std::vector<Eigen::Index> kept_p;
  for (Eigen::Index i = 0; i < r; ++i)
    if (sigma(i) > rank_tolerance * sigma_max)
      kept_p.push_back(i);
  const auto r2 = static_cast<Eigen::Index>(kept_p.size());
  Eigen::MatrixXd rot(r, r2);
  Eigen::VectorXd sig_k(r2);
  for (Eigen::Index c = 0; c < r2; ++c) {
    rot.col(c) = p_eig.eigenvectors().col(kept_p[static_cast<std::size_t>(c)]);
    sig_k(c) = sigma(kept_p[static_cast<std::size_t>(c)]);
  }
  const Eigen::VectorXd sig_sqrt = sig_k.cwiseSqrt();
  Eigen::MatrixXd mid = sig_sqrt.asDiagonal() * (rot.transpose() * j_sign.asDiagonal() * rot) * sig_sqrt.asDiagonal();
  mid = (mid + mid.transpose()) * 0.5;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> m_eig(mid);

  // Largest eigenvalues of the normalised affinity = smallest of L.
  const auto c_out = std::min<Eigen::Index>(static_cast<Eigen::Index>(count), r2);
  Eigen::MatrixXd e_sel(r2, c_out);
  EigenPairs out;
  out.values.resize(c_out);
  for (Eigen::Index c = 0; c < c_out; ++c) {
    const Eigen::Index src = r2 - 1 - c;
    e_sel.col(c) = m_eig.eigenvectors().col(src);
    out.values(c) = std::clamp(1.0 - m_eig.eigenvalues()(src), 0.0, 2.0);
  }
  const Eigen::MatrixXd f = s * rot * sig_sqrt.cwiseInverse().asDiagonal() * e_sel;
  out.vectors = rows.transpose() * f;
  fix_signs(out.vectors);
  return out;
}

NystromResult nystrom_eigs(const PointCloud& cloud, const GraphContext& ctx, double sample_fraction,
                           std::size_t k_upper, std::uint64_t rng_seed)
{
  if (!(sample_fraction > 0.0) || sample_fraction > 1.0)
    throw Error(ErrorKind::Parameter, "Nystrom sample fraction must lie in (0, 1]");
  const std::size_t n = cloud.size();
  const auto m = static_cast<std::size_t>(std::ceil(sample_fraction * static_cast<double>(n)));
  return nystrom_eigs_sized(cloud, ctx, m, k_upper, rng_seed);
}

NystromResult nystrom_eigs_sized(const PointCloud& cloud, const GraphContext& ctx, std::size_t landmark_count,
                                 std::size_t k_upper, std::uint64_t rng_seed)
{
  const std::size_t m = std::min(landmark_count, cloud.size());
  if (m < k_upper + 1)
    throw Error(ErrorKind::Parameter, "Nystrom sample of " + std::to_string(m) + " points is too small for " +
                                        std::to_string(k_upper + 1) + " eigenpairs");
  Rng rng(rng_seed);
  NystromResult out;
  out.landmarks = rng.sample_without_replacement(cloud.size(), m);
  std::sort(out.landmarks.begin(), out.landmarks.end());
  out.eig = nystrom_eigs(weight_matrix(cloud, ctx, out.landmarks), out.landmarks, k_upper + 1);
  return out;
}

std::size_t choose_k(std::span<const double> eigenvalues, std::size_t k_min, std::size_t k_max)
{
  if (k_min == 0 || k_min > k_max)
    throw Error(ErrorKind::Parameter, "choose_k requires 1 <= k_min <= k_max");
  if (eigenvalues.size() < k_max + 1)
    throw Error(ErrorKind::Parameter, "choose_k needs k_max + 1 eigenvalues");
  std::size_t best = k_min;
  double best_gap = eigenvalues[k_min] - eigenvalues[k_min - 1];
  for (std::size_t i = k_min + 1; i <= k_max; ++i) {
    const double gap = eigenvalues[i] - eigenvalues[i - 1];
    if (gap > best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  return best;
}

std::vector<double> eigengaps(std::span<const double> eigenvalues)
{
  std::vector<double> gaps;
  for (std::size_t i = 1; i < eigenvalues.size(); ++i)
    gaps.push_back(eigenvalues[i] - eigenvalues[i - 1]);
  return gaps;
}

Embedding spectral_embedding(const Eigen::MatrixXd& vectors, std::size_t k)
{
  if (k == 0 || static_cast<Eigen::Index>(k) > vectors.cols())
    throw Error(ErrorKind::Parameter, "embedding dimension exceeds the available eigenvectors");
  Embedding e;
  e.rows = vectors.leftCols(static_cast<Eigen::Index>(k));
  e.degenerate.assign(static_cast<std::size_t>(vectors.rows()), false);
  for (Eigen::Index i = 0; i < e.rows.rows(); ++i) {
    const double norm = e.rows.row(i).norm();
    if (norm <= 1e-12) {
      e.rows.row(i).setZero();
      e.degenerate[static_cast<std::size_t>(i)] = true;
    } else {
      e.rows.row(i) /= norm;
    }
  }
  return e;
}

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x, const Eigen::VectorXd& x_norms,
                                  const Eigen::MatrixXd& centers)
{
  Eigen::MatrixXd d = -2.0 * x * centers.transpose();
  d.colwise() += x_norms;
  d.rowwise() += centers.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& x, std::size_t k, Rng& rng)
{
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), x.cols());
  centers.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd best = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    const double total = best.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += best(i);
        if (acc > target && best(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    centers.row(static_cast<Eigen::Index>(c)) = x.row(pick);
    best = best.cwiseMin((x.rowwise() - x.row(pick)).rowwise().squaredNorm());
  }
  return centers;
}

ClusterAssignment lloyd(const Eigen::MatrixXd& x, const Eigen::VectorXd& x_norms, Eigen::MatrixXd centers,
                        std::size_t max_iter)
{
  const Eigen::Index n = x.rows();
  const auto k = centers.rows();
  ClusterAssignment out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> own(static_cast<std::size_t>(n), 0.0);

  for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
    const Eigen::MatrixXd d = squared_distances(x, x_norms, centers);
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg = 0;
      own[static_cast<std::size_t>(i)] = d.row(i).minCoeff(&arg);
      if (out.labels[static_cast<std::size_t>(i)] != static_cast<int>(arg)) {
        out.labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
        changed = true;
      }
    }

    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : out.labels)
      ++sizes[static_cast<std::size_t>(l)];
    for (Eigen::Index c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] != 0)
        continue;
      // re-seed from the farthest point of a cluster that can spare it
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto li = static_cast<std::size_t>(out.labels[static_cast<std::size_t>(i)]);
        if (sizes[li] > 1 && (far < 0 || own[static_cast<std::size_t>(i)] > own[static_cast<std::size_t>(far)]))
          far = i;
      }
      if (far < 0)
        break;
      --sizes[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(far)])];
      out.labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
      own[static_cast<std::size_t>(far)] = 0.0;
      sizes[static_cast<std::size_t>(c)] = 1;
      ++out.empty_cluster_events;
      changed = true;
    }

    centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      centers.row(out.labels[static_cast<std::size_t>(i)]) += x.row(i);
    for (Eigen::Index c = 0; c < k; ++c)
      if (sizes[static_cast<std::size_t>(c)] > 0)
        centers.row(c) /= static_cast<double>(sizes[static_cast<std::size_t>(c)]);

    if (!changed)
      break;
  }

  out.wcss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    out.wcss += (x.row(i) - centers.row(out.labels[static_cast<std::size_t>(i)])).squaredNorm();
  out.centers = std::move(centers);
  return out;
}

} // namespace

ClusterAssignment kmeans_assign(const Eigen::MatrixXd& rows, std::size_t k, std::uint64_t rng_seed,
                                const KMeansOptions& options)
{
  if (k == 0 || static_cast<Eigen::Index>(k) > rows.rows())
    throw Error(ErrorKind::Parameter, "k-means needs 1 <= k <= number of rows (k = " + std::to_string(k) +
                                        ", rows = " + std::to_string(rows.rows()) + ")");
  const Eigen::VectorXd norms = rows.rowwise().squaredNorm();
  ClusterAssignment best;
  best.wcss = std::numeric_limits<double>::infinity();
  std::size_t events = 0;
  for (std::size_t r = 0; r < std::max<std::size_t>(options.restarts, 1); ++r) {
    Rng rng(derive_seed(rng_seed, r));
    auto run = lloyd(rows, norms, kmeanspp_seed(rows, k, rng), options.max_iter);
    events += run.empty_cluster_events;
    if (run.wcss < best.wcss)
      best = std::move(run);
  }
  best.empty_cluster_events = events;
  return best;
}

double ncut_value(const Eigen::MatrixXd& w, std::span<const int> labels)
{
  if (static_cast<Eigen::Index>(labels.size()) != w.rows() || w.rows() != w.cols())
    throw Error(ErrorKind::Contract, "labels must cover every vertex of a square weight matrix");
  if (labels.empty())
    return 0.0;
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  if (*std::min_element(labels.begin(), labels.end()) < 0)
    throw Error(ErrorKind::Contract, "labels must be non-negative");
  std::vector<double> vol(static_cast<std::size_t>(k), 0.0), inner(static_cast<std::size_t>(k), 0.0);
  const Eigen::Index n = w.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto lj = labels[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = w(i, j);
      vol[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] += v;
      if (labels[static_cast<std::size_t>(i)] == lj)
        inner[static_cast<std::size_t>(lj)] += v;
    }
  }
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    if (!(vol[static_cast<std::size_t>(c)] > 0.0))
      throw Error(ErrorKind::Degenerate, "cluster " + std::to_string(c) + " has zero volume");
    total += (vol[static_cast<std::size_t>(c)] - inner[static_cast<std::size_t>(c)]) / vol[static_cast<std::size_t>(c)];
  }
  return 0.5 * total;
}

GraphPartition partition_graph(const Eigen::MatrixXd& w, std::size_t k_min, std::size_t k_max, std::uint64_t rng_seed,
                               const KMeansOptions& options)
{
  const auto n = static_cast<std::size_t>(w.rows());
  if (n < 2)
    throw Error(ErrorKind::Parameter, "partition_graph needs at least two vertices");
  k_max = std::min(k_max, n - 1);
  k_min = std::min(k_min, k_max);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const EigenPairs eig = nystrom_eigs(w, all, k_max + 1);
  if (static_cast<std::size_t>(eig.values.size()) < k_max + 1)
    throw Error(ErrorKind::Degenerate, "graph spectrum too small for the requested cluster range");

  GraphPartition out;
  out.spectral.eigenvalues.assign(eig.values.data(), eig.values.data() + eig.values.size());
  out.spectral.eigengaps = eigengaps(out.spectral.eigenvalues);
  out.spectral.chosen_k = choose_k(out.spectral.eigenvalues, k_min, k_max);
  out.spectral.embedding = spectral_embedding(eig.vectors, out.spectral.chosen_k);

  const auto& emb = out.spectral.embedding;
  std::vector<Eigen::Index> live;
  for (std::size_t i = 0; i < n; ++i)
    if (!emb.degenerate[i])
      live.push_back(static_cast<Eigen::Index>(i));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(live.size()), emb.rows.cols());
  for (std::size_t r = 0; r < live.size(); ++r)
    x.row(static_cast<Eigen::Index>(r)) = emb.rows.row(live[r]);
  auto fit = kmeans_assign(x, out.spectral.chosen_k, rng_seed, options);

  out.assignment.labels.assign(n, -1);
  for (std::size_t r = 0; r < live.size(); ++r)
    out.assignment.labels[static_cast<std::size_t>(live[r])] = fit.labels[r];
  for (std::size_t i = 0; i < n; ++i) {
    if (!emb.degenerate[i])
      continue;
    Eigen::Index best = live.front();
    for (auto j : live)
      if (w(static_cast<Eigen::Index>(i), j) > w(static_cast<Eigen::Index>(i), best))
        best = j;
    out.assignment.labels[i] = out.assignment.labels[static_cast<std::size_t>(best)];
  }
  out.assignment.centers = std::move(fit.centers);
  out.assignment.wcss = fit.wcss;
  out.assignment.empty_cluster_events = fit.empty_cluster_events;
  return out;
}

} // namespace mcgc
