#pragma once

#include "mcgc/point_cloud.hpp"

#include <iosfwd>
#include <string>

namespace mcgc {

/// Column layouts of the text formats. `xyzca_text` is what the tools
/// write after normalization (x y z class agh).
enum class CloudFormat { auto_detect, xyz_text, xyzc_text, xyzca_text };

CloudFormat parse_cloud_format(const std::string& name);

/// Reads whitespace- or comma-separated rows; `#` lines are comments.
/// Noise points (class 7) are dropped, the rest keep file order.
/// Throws Parse (with line number) on malformed rows and EmptyInput when
/// no rows are present.
PointCloud load_cloud(const std::string& path, CloudFormat format = CloudFormat::auto_detect);
PointCloud read_cloud(std::istream& in, CloudFormat format = CloudFormat::auto_detect);

/// Writes x y z class, plus agh when the cloud has been normalized.
void write_cloud(std::ostream& out, const PointCloud& cloud);
void save_cloud(const std::string& path, const PointCloud& cloud);

struct GroundOptions
{
  double ground_cell = 1.0;
  /// Use a flat plane at the lowest elevation when no ground points exist.
  bool flat_fallback = false;
};

/// Gridded-minimum ground model of the class-2 points, holes filled from the
/// nearest non-empty cell, bilinearly interpolated between cell centres.
class GroundModel
{
public:
  GroundModel(const PointCloud& cloud, const GroundOptions& options);

  double elevation(double x, double y) const;

private:
  double cell_value(long row, long col) const;

  double origin_x_ = 0.0, origin_y_ = 0.0, cell_ = 1.0;
  long width_ = 0, height_ = 0;
  std::vector<double> values_;
};

/// agh = z - ground(x, y), clamped at 0. Throws GroundModel when the cloud
/// has no ground points and no fallback is requested.
PointCloud normalize_heights(const PointCloud& cloud, const GroundOptions& options = {});

/// Per-cell maximum agh on a grid anchored at the cloud's minimum x, y.
/// Throws EmptyInput for an empty cloud.
Raster rasterize_chm(const PointCloud& cloud, double cell_size = 0.5);

} // namespace mcgc
