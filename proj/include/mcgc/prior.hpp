#pragma once

#include "mcgc/allometry.hpp"
#include "mcgc/point_cloud.hpp"

#include <cstddef>
#include <vector>

namespace mcgc {

struct TreeTop
{
  double x = 0.0;
  double y = 0.0;
  double h = 0.0;
  std::size_t row = 0;
  std::size_t col = 0;
};

/// Expected tree tops from the CHM and the cluster-count range they imply.
struct PriorResult
{
  std::vector<TreeTop> maxima; ///< ordered by (row, col)
  std::size_t k_min = 0;       ///< = maxima.size()
  std::size_t k_max = 0;       ///< = 2 * k_min
};

/// Variable-window local maxima. A cell of height v >= min_tree_height is a
/// maximum iff no cell whose centre lies within cd50(v)/2 of its centre is
/// higher, and no equal cell in that window comes earlier in (row, col)
/// order. Empty cells count as 0 m. Throws EmptyInput for an empty raster.
PriorResult find_local_maxima(const Raster& chm, const AllometrySet& allom, double min_tree_height = 2.0);

} // namespace mcgc
