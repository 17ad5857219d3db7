#pragma once

#include "mcgc/allometry.hpp"
#include "mcgc/point_cloud.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace mcgc {

enum class CrownStatus { accepted, merged_away, rejected };
enum class Provenance { layer1, layer2, merged };

const char* to_string(CrownStatus status);
const char* to_string(Provenance provenance);

struct Crown
{
  int id = 0;
  int layer = 1;
  std::vector<std::size_t> point_indices; ///< sorted ascending
  std::size_t top_index = 0;              ///< member with the largest agh (lowest index on ties)
  double top_x = 0.0;
  double top_y = 0.0;
  double top_agh = 0.0;
  double area = 0.0; ///< m^2, convex hull of member (x, y)
  CrownStatus status = CrownStatus::accepted;

  std::size_t size() const { return point_indices.size(); }
  bool accepted() const { return status == CrownStatus::accepted; }
};

/// Builds a crown from its members and fills in top and area.
Crown make_crown(int id, std::vector<std::size_t> members, const PointCloud& cloud, int layer = 1);

/// Recomputes top and area after the member list changed.
void refresh_crown(Crown& crown, const PointCloud& cloud);

/// Crowns plus the pool of unassigned points. Merged-away and rejected
/// crowns stay in the list with no members so ids remain traceable.
struct Segmentation
{
  std::vector<Crown> crowns;
  std::vector<std::size_t> unassigned; ///< sorted ascending
  Provenance provenance = Provenance::layer1;
  std::vector<std::string> notices;

  std::size_t accepted_count() const;
  /// Per-point crown id, -1 for unassigned. Throws Contract if a point is
  /// claimed twice or an index is out of range.
  std::vector<int> labels(std::size_t n) const;
  /// True when accepted crowns and the unassigned pool partition [0, n).
  bool is_partition(std::size_t n) const;
  /// Drops non-accepted crowns from the list.
  void compact();
};

/// Whether `lower` overlaps `upper` too much in both the horizontal and the
/// vertical sense. Horizontal: the tops are within max_radius(upper) of
/// each other, or at least 60% of lower's points lie within that 2D radius
/// of upper's top. Vertical: the 25th agh percentile of upper is below the
/// 75th agh percentile of lower.
bool overlap_excessive(const Crown& upper, const Crown& lower, const PointCloud& cloud, const RadiusTable& table);

/// Merges excessively overlapping crowns into their taller neighbour,
/// tallest first, re-evaluating after every merge.
Segmentation merge_overlaps(Segmentation seg, const PointCloud& cloud, const RadiusTable& table);

struct TrimResult
{
  Crown crown;
  std::vector<std::size_t> evicted;
};

/// Fraction of members farther than max_radius(top_agh) horizontally from the top.
double outside_fraction(const Crown& crown, const PointCloud& cloud, const RadiusTable& table);

/// Splits the members in two by Ward agglomerative clustering in 3D and
/// returns the two groups; the first holds `crown.top_index`.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> ward_split(const Crown& crown, const PointCloud& cloud);

/// While more than `max_outside` of the members lie beyond the allometric
/// radius, keeps the Ward half containing the top and evicts the other.
TrimResult trim_crown(const Crown& crown, const PointCloud& cloud, const RadiusTable& table,
                      double max_outside = 0.05);

/// Crowns with fewer than `min_points` members become rejected and release
/// their points to the unassigned pool.
Segmentation reject_small(Segmentation seg, std::size_t min_points = 100);

struct ConnectivityOptions
{
  double eps = 2.0;               ///< m, 3D
  std::size_t min_neighbors = 10; ///< other points within eps for a core point
};

/// Density clusters of the members (core points and their eps-reachable
/// border points). Keeps the cluster containing the top; if the top is
/// noise, the largest cluster; evicts everything else.
TrimResult connectivity_filter(const Crown& crown, const PointCloud& cloud, const ConnectivityOptions& options = {});

/// Cluster id per member (in member order), -1 for noise.
std::vector<int> density_clusters(const std::vector<std::size_t>& members, const PointCloud& cloud,
                                  const ConnectivityOptions& options);

struct RefineOptions
{
  std::size_t min_points = 100;
  double max_outside = 0.05;
  bool connectivity = true;
  ConnectivityOptions density;
};

/// Merge, trim, connectivity and size filtering, repeated until a pass
/// changes nothing, so every surviving crown satisfies all four checks.
Segmentation refine(Segmentation seg, const PointCloud& cloud, const RadiusTable& table, const RefineOptions& options);

/// Human-readable reasons why accepted crowns fail the acceptance rules;
/// empty when all pass. The overlap rule only compares crowns of the same
/// layer, since a second pass sees just the points the first left over.
std::vector<std::string> acceptance_violations(const Segmentation& seg, const PointCloud& cloud,
                                               const RadiusTable& table, const RefineOptions& options);

} // namespace mcgc
