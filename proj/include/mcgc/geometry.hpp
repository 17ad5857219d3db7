#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace mcgc {

/// Static k-d tree over 2D or 3D positions. Query results are ordered so
/// that output never depends on traversal order: radius queries by index,
/// nearest-neighbour queries by (distance, index).
class KdTree
{
public:
  using Position = std::array<double, 3>;

  /// `dims` is 2 (x, y only) or 3.
  KdTree(std::vector<Position> positions, int dims = 3);

  std::size_t size() const { return positions_.size(); }
  const Position& position(std::size_t i) const { return positions_[i]; }

  /// Indices within `radius` (inclusive) of `query`, sorted ascending.
  std::vector<std::size_t> radius(const Position& query, double radius) const;

  /// Number of points within `radius` of `query` (inclusive).
  std::size_t count_within(const Position& query, double radius) const;

  /// Up to `k` nearest indices, sorted by (distance, index).
  std::vector<std::size_t> nearest(const Position& query, std::size_t k) const;

private:
  struct Node
  {
    std::size_t begin = 0, end = 0; // range in order_
    int axis = -1;                  // -1 for a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end);
  double dist2(const Position& a, const Position& b) const;

  std::vector<Position> positions_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
  int dims_;
  std::size_t root_ = 0;
};

struct Vec2
{
  double x = 0.0;
  double y = 0.0;
};

/// Area of the convex hull of the given planar points (0 for < 3 points or collinear sets).
double convex_hull_area(std::vector<Vec2> pts);

/// Linear-interpolation percentile (q in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double q);

} // namespace mcgc
