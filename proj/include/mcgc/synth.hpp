#pragma once

#include "mcgc/allometry.hpp"
#include "mcgc/config.hpp"
#include "mcgc/crown_filter.hpp"
#include "mcgc/point_cloud.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace mcgc {

enum class CrownShape { ellipsoid, cone };

struct SynthTree
{
  double x = 0.0; ///< stem position, m
  double y = 0.0;
  double height = 20.0;
  double crown_diameter = 0.0; ///< m, 0 means cd50(height)
  CrownShape shape = CrownShape::ellipsoid;
  double crown_depth_fraction = 0.4; ///< crown depth / height
  double point_density = 12.0;       ///< crown points per m^3
  int label = 0;
};

/// Crown diameter actually used for the tree.
double resolved_crown_diameter(const SynthTree& tree, const AllometrySet& allom);

/// Whether (x, y, z above ground) lies in the tree's crown solid: the upper
/// half of an ellipsoid, or a cone with its apex at the tree top.
bool inside_crown(const SynthTree& tree, const AllometrySet& allom, double x, double y, double agh);

struct SceneSpec
{
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 30.0;
  double max_y = 30.0;
  std::vector<SynthTree> trees;
  double base_z = 0.0;
  double slope_x = 0.0; ///< ground rise per m in x; 0 and 0 give a flat ground
  double slope_y = 0.0;
  double noise_sd = 0.0;       ///< m, Gaussian jitter on every coordinate
  double ground_density = 5.0; ///< ground points per m^2
  double stem_density = 1.0;   ///< stem points per m
  std::uint64_t seed = 0;

  double ground_z(double x, double y) const { return base_z + slope_x * (x - min_x) + slope_y * (y - min_y); }
};

/// Cloud with exact above-ground heights plus per-point truth (-1 ground,
/// otherwise the tree label).
struct SynthScene
{
  PointCloud cloud;
  std::vector<int> truth;
};

/// Ground points come first, then per tree its apex, stem points below the
/// crown and crown points uniform in the crown solid.
/// Throws Parameter for a degenerate extent, non-positive densities or an
/// invalid crown depth fraction.
SynthScene generate_scene(const SceneSpec& spec, const AllometrySet& allom);

/// Reads a scene from the configuration format: extent, ground and noise
/// keys at the root, one `[[tree]]` table per tree, or a `[random]` table
/// with `trees`, `understory` and `seed` for a random plot.
SceneSpec parse_scene(const ConfigDocument& doc, const AllometrySet& allom);

/// Two trees of 30 m and 20 m, 6 m apart, with 50th-percentile crowns
/// 15% of the tree height deep and no stem returns.
SceneSpec two_tree_scene(std::uint64_t seed = 1);

/// A 40 m emergent with a 10 m crown over two 16 m understory trees whose
/// crowns lie entirely beneath it, so the canopy height model only shows
/// the emergent. No stem returns.
SceneSpec occlusion_scene(std::uint64_t seed = 1);

/// Random plot of `canopy` dominant trees and `understory` smaller trees,
/// stems placed without crown overlap among the canopy trees.
SceneSpec random_plot(double side, std::size_t canopy, std::size_t understory, std::uint64_t seed,
                      const AllometrySet& allom);

struct TruthScore
{
  std::size_t matched = 0;
  std::size_t crowns = 0;
  std::size_t trees = 0;
  double precision = 0.0;
  double recall = 0.0;
  double point_accuracy = 0.0;
};

/// One-to-one greedy matching of accepted crowns to truth trees by point
/// overlap; accuracy over non-ground points at or above `height_floor`.
TruthScore score_against_truth(const Segmentation& seg, const std::vector<int>& truth, const PointCloud& cloud,
                               double height_floor = 2.0);

/// Writes `index,truth` rows.
void write_truth(std::ostream& out, const std::vector<int>& truth);

} // namespace mcgc
