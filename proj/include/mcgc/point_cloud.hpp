#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace mcgc {

/// Airborne-laser class codes used by the loaders.
namespace class_code {
inline constexpr int unclassified = 0;
inline constexpr int ground = 2;
inline constexpr int noise = 7;
} // namespace class_code

struct Point
{
  double x = 0.0; ///< easting, m
  double y = 0.0; ///< northing, m
  double z = 0.0; ///< elevation, m
  int class_code = class_code::unclassified;
  double agh = 0.0; ///< above-ground height, m (valid after normalization)
};

/// Point indices are stable identifiers for the lifetime of a run.
struct PointCloud
{
  std::vector<Point> points;
  std::string crs_note;
  bool has_agh = false;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point& operator[](std::size_t i) const { return points[i]; }
  Point& operator[](std::size_t i) { return points[i]; }

  double max_agh() const;

  /// New cloud holding the listed points, in list order.
  PointCloud subset(const std::vector<std::size_t>& indices) const;
};

/// Grid of per-cell maxima. Row index grows with y, column index with x.
struct Raster
{
  static constexpr double empty_value = std::numeric_limits<double>::quiet_NaN();

  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 0.5;
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values; ///< row-major, NaN marks an empty cell

  bool empty() const { return width == 0 || height == 0; }
  std::size_t index(std::size_t row, std::size_t col) const { return row * width + col; }
  double at(std::size_t row, std::size_t col) const { return values[index(row, col)]; }
  bool is_empty_cell(std::size_t row, std::size_t col) const;
  /// Cell value with empty cells read as 0 m.
  double height_or_zero(std::size_t row, std::size_t col) const;
  double center_x(std::size_t col) const { return origin_x + (static_cast<double>(col) + 0.5) * cell_size; }
  double center_y(std::size_t row) const { return origin_y + (static_cast<double>(row) + 0.5) * cell_size; }
};

} // namespace mcgc
