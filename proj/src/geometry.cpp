#include "mcgc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <utility>

namespace mcgc {

namespace {
constexpr std::size_t leaf_size = 12;
}

KdTree::KdTree(std::vector<Position> positions, int dims)
  : positions_(std::move(positions))
  , dims_(dims == 2 ? 2 : 3)
{
  order_.resize(positions_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * positions_.size() / leaf_size + 2);
  root_ = build(0, order_.size());
}

std::size_t KdTree::build(std::size_t begin, std::size_t end)
{
  const std::size_t id = nodes_.size();
  nodes_.push_back(Node{begin, end});
  if (end - begin <= leaf_size)
    return id;

  // split on the widest axis
  Position lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
  for (std::size_t i = begin; i < end; ++i) {
    const auto& p = positions_[order_[i]];
    for (int a = 0; a < dims_; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  int axis = 0;
  for (int a = 1; a < dims_; ++a)
    if (hi[a] - lo[a] > hi[axis] - lo[axis])
      axis = a;
  if (hi[axis] - lo[axis] <= 0.0)
    return id; // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     const double pa = positions_[a][axis], pb = positions_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = positions_[order_[mid]][axis];
  const std::size_t left = build(begin, mid);
  const std::size_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

double KdTree::dist2(const Position& a, const Position& b) const
{
  double s = 0.0;
  for (int k = 0; k < dims_; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

std::vector<std::size_t> KdTree::radius(const Position& query, double r) const
{
  std::vector<std::size_t> out;
  if (positions_.empty() || r < 0.0)
    return out;
  const double r2 = r * r;
  std::vector<std::size_t> stack{root_};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i)
        if (dist2(positions_[order_[i]], query) <= r2)
          out.push_back(order_[i]);
      continue;
    }
    const double d = query[n.axis] - n.split;
    if (d - r <= 0.0)
      stack.push_back(n.left);
    if (d + r >= 0.0)
      stack.push_back(n.right);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t KdTree::count_within(const Position& query, double r) const
{
  std::size_t count = 0;
  if (positions_.empty() || r < 0.0)
    return 0;
  const double r2 = r * r;
  std::vector<std::size_t> stack{root_};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i)
        if (dist2(positions_[order_[i]], query) <= r2)
          ++count;
      continue;
    }
    const double d = query[n.axis] - n.split;
    if (d - r <= 0.0)
      stack.push_back(n.left);
    if (d + r >= 0.0)
      stack.push_back(n.right);
  }
  return count;
}

std::vector<std::size_t> KdTree::nearest(const Position& query, std::size_t k) const
{
  using Entry = std::pair<double, std::size_t>; // (dist2, index); max-heap keeps the worst on top
  std::priority_queue<Entry> heap;
  if (k == 0 || positions_.empty())
    return {};

  auto visit = [&](auto&& self, std::size_t node_id) -> void {
    const Node& n = nodes_[node_id];
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const Entry e{dist2(positions_[order_[i]], query), order_[i]};
        if (heap.size() < k)
          heap.push(e);
        else if (e < heap.top()) {
          heap.pop();
          heap.push(e);
        }
      }
      return;
    }
    const double d = query[n.axis] - n.split;
    const std::size_t near = d <= 0.0 ? n.left : n.right;
    const std::size_t far = d <= 0.0 ? n.right : n.left;
    self(self, near);
    if (heap.size() < k || d * d <= heap.top().first)
      self(self, far);
  };
  visit(visit, root_);

  std::vector<Entry> entries;
  entries.reserve(heap.size());
  while (!heap.empty()) {
    entries.push_back(heap.top());
    heap.pop();
  }
  std::sort(entries.begin(), entries.end());
  std::vector<std::size_t> out;
  out.reserve(entries.size());
  for (const auto& e : entries)
    out.push_back(e.second);
  return out;
}

double convex_hull_area(std::vector<Vec2> pts)
{
  if (pts.size() < 3)
    return 0.0;
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  // Andrew's monotone chain
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0)
      --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0)
      --k;
    hull[k++] = pts[i];
  }
  hull.resize(k > 0 ? k - 1 : 0);
  if (hull.size() < 3)
    return 0.0;
  double area2 = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % hull.size()];
    area2 += a.x * b.y - b.x * a.y;
  }
  return std::abs(area2) * 0.5;
}

double percentile(std::vector<double> values, double q)
{
  if (values.empty())
    return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

} // namespace mcgc
