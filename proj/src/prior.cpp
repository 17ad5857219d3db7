#include "mcgc/prior.hpp"

#include "mcgc/error.hpp"

#include <algorithm>
#include <cmath>

namespace mcgc {

PriorResult find_local_maxima(const Raster& chm, const AllometrySet& allom, double min_tree_height)
{
  if (chm.empty())
    throw Error(ErrorKind::EmptyInput, "cannot search an empty CHM for maxima");

  PriorResult result;
  const double cs = chm.cell_size;
  const auto height = static_cast<long>(chm.height);
  const auto width = static_cast<long>(chm.width);
  const double floor_h = std::max(min_tree_height, 0.0);

  for (long r = 0; r < height; ++r) {
    for (long c = 0; c < width; ++c) {
      const double v = chm.height_or_zero(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      if (v < floor_h || v <= 0.0)
        continue;
      const double radius = crown_diameter(allom, v, CrownPercentile::p50) / 2.0;
      const long reach = static_cast<long>(std::floor(radius / cs));
      const double r2 = radius * radius;
      bool is_max = true;
      for (long dr = -reach; dr <= reach && is_max; ++dr) {
        const long rr = r + dr;
        if (rr < 0 || rr >= height)
          continue;
        for (long dc = -reach; dc <= reach; ++dc) {
          const long cc = c + dc;
          if (cc < 0 || cc >= width || (dr == 0 && dc == 0))
            continue;
          const double dx = static_cast<double>(dc) * cs, dy = static_cast<double>(dr) * cs;
          if (dx * dx + dy * dy > r2)
            continue;
          const double u = chm.height_or_zero(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
          // equal neighbours earlier in (row, col) order win the tie
          if (u > v || (u == v && (rr < r || (rr == r && cc < c)))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) {
        const auto ur = static_cast<std::size_t>(r), uc = static_cast<std::size_t>(c);
        result.maxima.push_back({chm.center_x(uc), chm.center_y(ur), v, ur, uc});
      }
    }
  }
  result.k_min = result.maxima.size();
  result.k_max = 2 * result.k_min;
  return result;
}

} // namespace mcgc
