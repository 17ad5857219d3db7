#pragma once

#include "mcgc/allometry.hpp"
#include "mcgc/crown_filter.hpp"
#include "mcgc/graph_weights.hpp"
#include "mcgc/point_cloud.hpp"
#include "mcgc/spectral_cut.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace mcgc {

struct PipelineConfig
{
  WeightParams params;
  int layers = 1;
  double subsample_fraction = 0.2;
  double nystrom_fraction = 0.1;
  std::optional<std::size_t> impute_m; ///< defaults to round(1 / subsample_fraction)
  double min_tree_height = 2.0;
  std::uint64_t rng_seed = 0;
  std::size_t min_points = 100;
  /// Lower bound on the number of Nystrom landmarks for small clouds.
  std::size_t min_landmarks = 500;
  KMeansOptions kmeans;

  std::size_t effective_impute_m() const;
  /// Throws Parameter on out-of-range settings.
  void validate() const;
};

/// What one pass of the graph cut saw and chose.
struct LayerTrace
{
  int layer = 1;
  std::size_t candidates = 0; ///< points with agh >= min_tree_height
  std::size_t sampled = 0;
  std::size_t landmarks = 0;
  std::size_t k_min = 0;
  std::size_t k_max = 0;
  std::size_t chosen_k = 0;
  std::vector<double> eigenvalues;
  std::vector<double> eigengaps;
  std::size_t accepted = 0;
};

struct PipelineTrace
{
  std::vector<LayerTrace> layers;
};

struct Subsample
{
  PointCloud cloud;
  std::vector<std::size_t> kept; ///< original indices, ascending
};

/// ceil(fraction * n) points drawn uniformly without replacement.
Subsample subsample(const PointCloud& cloud, double fraction, std::uint64_t rng_seed);

/// Extends a segmentation of the subsample to the full cloud. Each other
/// point takes the majority label (a crown or unassigned) of its m nearest
/// sampled points in 3D, ties going to the label of the nearest voter. A
/// point only joins a crown within max_radius of that crown's top.
/// Throws Parameter if m exceeds the number of sampled points.
Segmentation impute_labels(const PointCloud& full, const Segmentation& sub_seg, const std::vector<std::size_t>& kept,
                           std::size_t m, const RadiusTable& table);

/// One pass of the graph cut on a normalized cloud. Crowns carry ids
/// 0..n-1 in descending order of top height.
Segmentation segment_single_layer(const PointCloud& cloud, const PipelineConfig& cfg, const AllometrySet& allom,
                                  PipelineTrace* trace = nullptr);

/// Single layer, then a second pass over the unassigned points at or above
/// min_tree_height. Layer-2 ids follow the layer-1 ids.
Segmentation segment_double_layer(const PointCloud& cloud, const PipelineConfig& cfg, const AllometrySet& allom,
                                  PipelineTrace* trace = nullptr);

/// Dispatches on cfg.layers.
Segmentation segment(const PointCloud& cloud, const PipelineConfig& cfg, const AllometrySet& allom,
                     PipelineTrace* trace = nullptr);

} // namespace mcgc
