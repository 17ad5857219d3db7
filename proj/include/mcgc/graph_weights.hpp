#pragma once

#include "mcgc/allometry.hpp"
#include "mcgc/point_cloud.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace mcgc {

/// Tuning parameters of the similarity weights.
struct WeightParams
{
  double sigma_xy = 4.0; ///< horizontal length scale, m
  double sigma_z = 2.0;  ///< vertical length scale, m
  double w_h = 0.2;      ///< strength of the horizontal centroid penalty
  double w_z = 0.2;      ///< strength of the vertical centroid penalty

  /// Throws Parameter unless all four are strictly positive.
  void validate() const;
};

/// Offset from a point to the centroid of its allometric neighbourhood.
struct CentroidVector
{
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  std::size_t neighbor_count = 0; ///< neighbours other than the point itself

  bool horizontal_is_zero() const { return dx == 0.0 && dy == 0.0; }
};

/// Everything the pairwise weight needs besides the two points.
struct GraphContext
{
  std::vector<CentroidVector> centroids;
  double k_h = 0.0; ///< cd95(max agh) / 2
  double k_z = 0.0; ///< max agh / 2
  WeightParams params;
};

struct PairGeometry
{
  double d_h = 0.0;     ///< horizontal distance, m
  double d_z = 0.0;     ///< absolute vertical distance, m
  double theta_h = 0.0; ///< angle between the horizontal centroid offsets, [0, pi]

  static PairGeometry between(const Point& a, const Point& b, const CentroidVector& ca, const CentroidVector& cb);
};

/// Distance floor applied to d_h and d_z in the penalty terms.
inline constexpr double distance_floor = 0.01;

/// Neighbourhood of point i is the 3D ball (raw z) of radius cd95(agh_i)/4,
/// the point itself included. Points with agh <= 0 get a zero offset.
std::vector<CentroidVector> compute_centroids(const PointCloud& cloud, const AllometrySet& allom);

/// Centroids plus the K_H, K_Z normalisers. Throws Degenerate if the cloud
/// has no point above ground.
GraphContext make_graph_context(const PointCloud& cloud, const AllometrySet& allom, const WeightParams& params);

/// Gaussian similarity on raw coordinates.
double base_weight(const Point& a, const Point& b, const WeightParams& params);

/// Applies the centroid-direction penalties to `base`. The horizontal term
/// fires when the offsets point more than a right angle apart; the vertical
/// term when their signs differ and the strictly taller point's offset is >= 0.
double adjusted_weight(double base, const CentroidVector& ci, const CentroidVector& cj, double agh_i, double agh_j,
                       const PairGeometry& geom, const GraphContext& ctx);

/// Final weight between two points of the cloud; 0 on the diagonal.
double pair_weight(const PointCloud& cloud, const GraphContext& ctx, std::size_t i, std::size_t j);

/// Rows = sampled points, columns = all points. Throws Resource when the
/// matrix would exceed `max_bytes`.
Eigen::MatrixXd weight_matrix(const PointCloud& cloud, const GraphContext& ctx, std::span<const std::size_t> sample,
                              std::size_t max_bytes = std::size_t{4} << 30);

} // namespace mcgc
