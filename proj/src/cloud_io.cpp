#include "mcgc/cloud_io.hpp"

#include "mcgc/error.hpp"
#include "mcgc/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

namespace mcgc {

double PointCloud::max_agh() const
{
  double m = 0.0;
  for (const auto& p : points)
    m = std::max(m, p.agh);
  return m;
}

PointCloud PointCloud::subset(const std::vector<std::size_t>& indices) const
{
  PointCloud out;
  out.crs_note = crs_note;
  out.has_agh = has_agh;
  out.points.reserve(indices.size());
  for (auto i : indices)
    out.points.push_back(points.at(i));
  return out;
}

bool Raster::is_empty_cell(std::size_t row, std::size_t col) const { return std::isnan(at(row, col)); }

double Raster::height_or_zero(std::size_t row, std::size_t col) const
{
  const double v = at(row, col);
  return std::isnan(v) ? 0.0 : v;
}

CloudFormat parse_cloud_format(const std::string& name)
{
  if (name == "auto")
    return CloudFormat::auto_detect;
  if (name == "xyz" || name == "xyz_text")
    return CloudFormat::xyz_text;
  if (name == "xyzc" || name == "xyzc_text")
    return CloudFormat::xyzc_text;
  if (name == "xyzca" || name == "xyzca_text")
    return CloudFormat::xyzca_text;
  throw Error(ErrorKind::Config, "unknown cloud format '" + name + "'");
}

namespace {

std::size_t expected_columns(CloudFormat f)
{
  switch (f) {
  case CloudFormat::xyz_text: return 3;
  case CloudFormat::xyzc_text: return 4;
  case CloudFormat::xyzca_text: return 5;
  case CloudFormat::auto_detect: return 0;
  }
  return 0;
}

// Splits on whitespace and commas; returns false if a field is not numeric.
bool parse_fields(std::string_view line, std::vector<double>& out)
{
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == ',' || line[i] == '\r'))
      ++i;
    if (i >= line.size())
      break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != ',' && line[j] != '\r')
      ++j;
    double v = 0.0;
    const char* first = line.data() + i;
    const char* last = line.data() + j;
    if (*first == '+')
      ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
      return false;
    out.push_back(v);
    i = j;
  }
  return true;
}

void append_number(std::string& s, double v)
{
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  s.append(buf, res.ptr);
}

} // namespace

PointCloud read_cloud(std::istream& in, CloudFormat format)
{
  PointCloud cloud;
  std::size_t columns = expected_columns(format);
  std::string line;
  std::vector<double> fields;
  std::size_t line_no = 0;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#')
      continue;
    const auto where = "line " + std::to_string(line_no) + ": ";
    if (!parse_fields(line, fields))
      throw Error(ErrorKind::Parse, where + "non-numeric field");
    if (columns == 0) {
      if (fields.size() < 3 || fields.size() > 5)
        throw Error(ErrorKind::Parse, where + "expected 3 to 5 columns, found " + std::to_string(fields.size()));
      columns = fields.size();
    }
    if (fields.size() != columns)
      throw Error(ErrorKind::Parse, where + "expected " + std::to_string(columns) + " columns, found " +
                                      std::to_string(fields.size()));
    ++rows;
    Point p;
    p.x = fields[0];
    p.y = fields[1];
    p.z = fields[2];
    if (columns >= 4) {
      if (fields[3] != std::floor(fields[3]) || fields[3] < 0 || fields[3] > 255)
        throw Error(ErrorKind::Parse, where + "class code must be an integer in [0, 255]");
      p.class_code = static_cast<int>(fields[3]);
    }
    if (columns == 5)
      p.agh = std::max(0.0, fields[4]);
    if (p.class_code == class_code::noise)
      continue;
    cloud.points.push_back(p);
  }
  if (rows == 0)
    throw Error(ErrorKind::EmptyInput, "input contains no points");
  cloud.has_agh = columns == 5;
  return cloud;
}

PointCloud load_cloud(const std::string& path, CloudFormat format)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  return read_cloud(in, format);
}

void write_cloud(std::ostream& out, const PointCloud& cloud)
{
  std::string s;
  s.reserve(64);
  for (const auto& p : cloud.points) {
    s.clear();
    append_number(s, p.x);
    s += ' ';
    append_number(s, p.y);
    s += ' ';
    append_number(s, p.z);
    s += ' ';
    s += std::to_string(p.class_code);
    if (cloud.has_agh) {
      s += ' ';
      append_number(s, p.agh);
    }
    s += '\n';
    out << s;
  }
}

void save_cloud(const std::string& path, const PointCloud& cloud)
{
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorKind::Parse, "cannot write '" + path + "'");
  write_cloud(out, cloud);
}

GroundModel::GroundModel(const PointCloud& cloud, const GroundOptions& options)
  : cell_(options.ground_cell)
{
  if (!(cell_ > 0.0))
    throw Error(ErrorKind::Parameter, "ground cell size must be positive");
  if (cloud.empty())
    throw Error(ErrorKind::EmptyInput, "cannot build a ground model from an empty cloud");

  std::size_t n_ground = 0;
  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300, min_z = 1e300;
  for (const auto& p : cloud.points) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
    min_z = std::min(min_z, p.z);
    if (p.class_code == class_code::ground)
      ++n_ground;
  }
  origin_x_ = min_x;
  origin_y_ = min_y;

  if (n_ground < 3) {
    if (!options.flat_fallback)
      throw Error(ErrorKind::GroundModel, "need at least 3 ground-classified points (found " +
                                            std::to_string(n_ground) + "); enable the flat-ground fallback");
    width_ = height_ = 1;
    values_.assign(1, min_z);
    return;
  }

  width_ = static_cast<long>(std::floor((max_x - min_x) / cell_)) + 1;
  height_ = static_cast<long>(std::floor((max_y - min_y) / cell_)) + 1;
  values_.assign(static_cast<std::size_t>(width_ * height_), std::numeric_limits<double>::infinity());
  for (const auto& p : cloud.points) {
    if (p.class_code != class_code::ground)
      continue;
    const long c = std::min(width_ - 1, static_cast<long>(std::floor((p.x - origin_x_) / cell_)));
    const long r = std::min(height_ - 1, static_cast<long>(std::floor((p.y - origin_y_) / cell_)));
    double& v = values_[static_cast<std::size_t>(r * width_ + c)];
    v = std::min(v, p.z);
  }

  // nearest filled cell (Euclidean between cell centres) for every hole
  std::vector<KdTree::Position> filled_pos;
  std::vector<double> filled_val;
  for (long r = 0; r < height_; ++r)
    for (long c = 0; c < width_; ++c) {
      const double v = values_[static_cast<std::size_t>(r * width_ + c)];
      if (std::isfinite(v)) {
        filled_pos.push_back({static_cast<double>(c), static_cast<double>(r), 0.0});
        filled_val.push_back(v);
      }
    }
  if (filled_pos.size() == values_.size())
    return;
  const KdTree tree(filled_pos, 2);
  for (long r = 0; r < height_; ++r)
    for (long c = 0; c < width_; ++c) {
      double& v = values_[static_cast<std::size_t>(r * width_ + c)];
      if (!std::isfinite(v))
        v = filled_val[tree.nearest({static_cast<double>(c), static_cast<double>(r), 0.0}, 1).front()];
    }
}

double GroundModel::cell_value(long row, long col) const
{
  row = std::clamp(row, 0L, height_ - 1);
  col = std::clamp(col, 0L, width_ - 1);
  return values_[static_cast<std::size_t>(row * width_ + col)];
}

double GroundModel::elevation(double x, double y) const
{
  const double fx = (x - origin_x_) / cell_ - 0.5;
  const double fy = (y - origin_y_) / cell_ - 0.5;
  const double cx = std::floor(fx), cy = std::floor(fy);
  const double tx = fx - cx, ty = fy - cy;
  const long c0 = static_cast<long>(cx), r0 = static_cast<long>(cy);
  const double v00 = cell_value(r0, c0), v01 = cell_value(r0, c0 + 1);
  const double v10 = cell_value(r0 + 1, c0), v11 = cell_value(r0 + 1, c0 + 1);
  return (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
}

PointCloud normalize_heights(const PointCloud& cloud, const GroundOptions& options)
{
  const GroundModel ground(cloud, options);
  PointCloud out = cloud;
  for (auto& p : out.points)
    p.agh = std::max(0.0, p.z - ground.elevation(p.x, p.y));
  out.has_agh = true;
  return out;
}

Raster rasterize_chm(const PointCloud& cloud, double cell_size)
{
  if (cloud.empty())
    throw Error(ErrorKind::EmptyInput, "cannot rasterize an empty cloud");
  if (!(cell_size > 0.0))
    throw Error(ErrorKind::Parameter, "CHM cell size must be positive");
  if (!cloud.has_agh)
    throw Error(ErrorKind::Contract, "rasterize_chm requires a normalized cloud");

  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
  for (const auto& p : cloud.points) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  Raster r;
  r.origin_x = min_x;
  r.origin_y = min_y;
  r.cell_size = cell_size;
  r.width = static_cast<std::size_t>(std::floor((max_x - min_x) / cell_size)) + 1;
  r.height = static_cast<std::size_t>(std::floor((max_y - min_y) / cell_size)) + 1;
  r.values.assign(r.width * r.height, Raster::empty_value);
  for (const auto& p : cloud.points) {
    const auto c = std::min(r.width - 1, static_cast<std::size_t>(std::floor((p.x - min_x) / cell_size)));
    const auto row = std::min(r.height - 1, static_cast<std::size_t>(std::floor((p.y - min_y) / cell_size)));
    double& v = r.values[r.index(row, c)];
    if (std::isnan(v) || p.agh > v)
      v = p.agh;
  }
  return r;
}

} // namespace mcgc
