#pragma once

#include "mcgc/error.hpp"
#include "mcgc/point_cloud.hpp"
#include "mcgc/rng.hpp"

#include <array>
#include <cmath>
#include <ctime>
#include <functional>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace mcgc::test {

/// Normalized cloud from (x, y, agh) triples on flat ground at z = 0.
inline PointCloud flat_cloud(const std::vector<std::array<double, 3>>& xyh)
{
  PointCloud c;
  c.has_agh = true;
  for (const auto& [x, y, h] : xyh) {
    Point p;
    p.x = x;
    p.y = y;
    p.z = h;
    p.agh = h;
    c.points.push_back(p);
  }
  return c;
}

inline void add_point(PointCloud& c, double x, double y, double h, int cls = class_code::unclassified)
{
  Point p;
  p.x = x;
  p.y = y;
  p.z = h;
  p.agh = h;
  p.class_code = cls;
  c.points.push_back(p);
}

/// `n` points uniform in a ball.
inline void add_ball(PointCloud& c, Rng& rng, double cx, double cy, double ch, double r, std::size_t n)
{
  for (std::size_t i = 0; i < n;) {
    const double dx = rng.uniform(-r, r), dy = rng.uniform(-r, r), dz = rng.uniform(-r, r);
    if (dx * dx + dy * dy + dz * dz > r * r)
      continue;
    add_point(c, cx + dx, cy + dy, std::max(0.0, ch + dz));
    ++i;
  }
}

/// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir
{
public:
  TempDir()
  {
    Rng rng(static_cast<std::uint64_t>(std::hash<std::string>{}(std::to_string(reinterpret_cast<std::uintptr_t>(this)))) ^
            static_cast<std::uint64_t>(std::time(nullptr)));
    path_ = std::filesystem::temp_directory_path() / ("mcgc_test_" + std::to_string(rng.next()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir()
  {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const
  {
    std::ofstream(file(name), std::ios::binary) << text;
    return file(name);
  }

private:
  std::filesystem::path path_;
};

/// True when `fn` throws an Error of the given kind.
inline bool throws_kind(ErrorKind kind, const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.kind() == kind;
  }
  return false;
}

inline std::string slurp(const std::string& path)
{
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

} // namespace mcgc::test
