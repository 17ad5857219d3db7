#include "mcgc/crown_filter.hpp"

#include "mcgc/error.hpp"
#include "mcgc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mcgc {

const char* to_string(CrownStatus status)
{
  switch (status) {
  case CrownStatus::accepted: return "accepted";
  case CrownStatus::merged_away: return "merged_away";
  case CrownStatus::rejected: return "rejected";
  }
  return "unknown";
}

const char* to_string(Provenance provenance)
{
  switch (provenance) {
  case Provenance::layer1: return "layer1";
  case Provenance::layer2: return "layer2";
  case Provenance::merged: return "merged";
  }
  return "unknown";
}

void refresh_crown(Crown& crown, const PointCloud& cloud)
{
  std::sort(crown.point_indices.begin(), crown.point_indices.end());
  if (crown.point_indices.empty()) {
    crown.area = 0.0;
    return;
  }
  std::size_t top = crown.point_indices.front();
  std::vector<Vec2> xy;
  xy.reserve(crown.size());
  for (auto i : crown.point_indices) {
    if (cloud[i].agh > cloud[top].agh)
      top = i;
    xy.push_back({cloud[i].x, cloud[i].y});
  }
  crown.top_index = top;
  crown.top_x = cloud[top].x;
  crown.top_y = cloud[top].y;
  crown.top_agh = cloud[top].agh;
  crown.area = convex_hull_area(std::move(xy));
}

Crown make_crown(int id, std::vector<std::size_t> members, const PointCloud& cloud, int layer)
{
  Crown c;
  c.id = id;
  c.layer = layer;
  c.point_indices = std::move(members);
  refresh_crown(c, cloud);
  return c;
}

std::size_t Segmentation::accepted_count() const
{
  return static_cast<std::size_t>(std::count_if(crowns.begin(), crowns.end(), [](const Crown& c) { return c.accepted(); }));
}

std::vector<int> Segmentation::labels(std::size_t n) const
{
  std::vector<int> out(n, -1);
  std::vector<bool> seen(n, false);
  auto claim = [&](std::size_t i) {
    if (i >= n)
      throw Error(ErrorKind::Contract, "segmentation refers to point " + std::to_string(i) + " outside the cloud");
    if (seen[i])
      throw Error(ErrorKind::Contract, "point " + std::to_string(i) + " is claimed twice");
    seen[i] = true;
  };
  for (const auto& c : crowns) {
    if (!c.accepted() && !c.point_indices.empty())
      throw Error(ErrorKind::Contract, "non-accepted crown still holds points");
    for (auto i : c.point_indices) {
      claim(i);
      out[i] = c.id;
    }
  }
  for (auto i : unassigned)
    claim(i);
  return out;
}

bool Segmentation::is_partition(std::size_t n) const
{
  std::vector<bool> seen(n, false);
  std::size_t total = 0;
  auto visit = [&](const std::vector<std::size_t>& idx) {
    for (auto i : idx) {
      if (i >= n || seen[i])
        return false;
      seen[i] = true;
      ++total;
    }
    return true;
  };
  for (const auto& c : crowns)
    if ((c.accepted() || !c.point_indices.empty()) && !visit(c.point_indices))
      return false;
  return visit(unassigned) && total == n;
}

void Segmentation::compact()
{
  crowns.erase(std::remove_if(crowns.begin(), crowns.end(), [](const Crown& c) { return !c.accepted(); }),
               crowns.end());
}

namespace {

struct Quartiles
{
  double p25 = 0.0;
  double p75 = 0.0;
};

Quartiles agh_quartiles(const Crown& c, const PointCloud& cloud)
{
  std::vector<double> v;
  v.reserve(c.size());
  for (auto i : c.point_indices)
    v.push_back(cloud[i].agh);
  return {percentile(v, 25.0), percentile(v, 75.0)};
}

bool horizontal_excess(const Crown& upper, const Crown& lower, const PointCloud& cloud, const RadiusTable& table)
{
  const double r = table.max_radius(upper.top_agh);
  if (std::hypot(lower.top_x - upper.top_x, lower.top_y - upper.top_y) <= r)
    return true;
  const double r2 = r * r;
  std::size_t inside = 0;
  for (auto i : lower.point_indices) {
    const double dx = cloud[i].x - upper.top_x, dy = cloud[i].y - upper.top_y;
    if (dx * dx + dy * dy <= r2)
      ++inside;
  }
  return static_cast<double>(inside) >= 0.6 * static_cast<double>(lower.size());
}

bool taller_first(const Crown& a, const Crown& b)
{
  if (a.top_agh != b.top_agh)
    return a.top_agh > b.top_agh;
  return a.id < b.id;
}

} // namespace

bool overlap_excessive(const Crown& upper, const Crown& lower, const PointCloud& cloud, const RadiusTable& table)
{
  if (upper.point_indices.empty() || lower.point_indices.empty())
    return false;
  if (!(agh_quartiles(upper, cloud).p25 < agh_quartiles(lower, cloud).p75))
    return false;
  return horizontal_excess(upper, lower, cloud, table);
}

Segmentation merge_overlaps(Segmentation seg, const PointCloud& cloud, const RadiusTable& table)
{
  std::vector<Quartiles> q(seg.crowns.size());
  for (std::size_t c = 0; c < seg.crowns.size(); ++c)
    if (seg.crowns[c].accepted() && !seg.crowns[c].point_indices.empty())
      q[c] = agh_quartiles(seg.crowns[c], cloud);

  for (;;) {
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < seg.crowns.size(); ++c)
      if (seg.crowns[c].accepted() && !seg.crowns[c].point_indices.empty())
        order.push_back(c);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return taller_first(seg.crowns[a], seg.crowns[b]); });

    bool merged = false;
    for (std::size_t u = 0; u < order.size() && !merged; ++u) {
      Crown& upper = seg.crowns[order[u]];
      for (std::size_t l = u + 1; l < order.size(); ++l) {
        Crown& lower = seg.crowns[order[l]];
        if (!(q[order[u]].p25 < q[order[l]].p75) || !horizontal_excess(upper, lower, cloud, table))
          continue;
        upper.point_indices.insert(upper.point_indices.end(), lower.point_indices.begin(), lower.point_indices.end());
        refresh_crown(upper, cloud);
        q[order[u]] = agh_quartiles(upper, cloud);
        lower.point_indices.clear();
        lower.status = CrownStatus::merged_away;
        refresh_crown(lower, cloud);
        merged = true;
        break;
      }
    }
    if (!merged)
      break;
  }
  return seg;
}

double outside_fraction(const Crown& crown, const PointCloud& cloud, const RadiusTable& table)
{
  if (crown.point_indices.empty())
    return 0.0;
  const double r = table.max_radius(crown.top_agh);
  std::size_t outside = 0;
  for (auto i : crown.point_indices)
    if (std::hypot(cloud[i].x - crown.top_x, cloud[i].y - crown.top_y) > r)
      ++outside;
  return static_cast<double>(outside) / static_cast<double>(crown.size());
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> ward_split(const Crown& crown, const PointCloud& cloud)
{
  const auto& members = crown.point_indices;
  const std::size_t n = members.size();
  if (n < 2)
    return {members, {}};

  // Ward distance between clusters depends only on sizes and centroids,
  // so the nearest-neighbour chain runs in linear memory.
  const Point& ref = cloud[crown.top_index];
  std::vector<std::array<double, 3>> centroid(n);
  std::vector<double> size(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = cloud[members[i]];
    centroid[i] = {p.x - ref.x, p.y - ref.y, p.z - ref.z};
  }
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), std::size_t{0});
  std::vector<std::size_t> pos(n);
  std::iota(pos.begin(), pos.end(), std::size_t{0});

  auto ward = [&](std::size_t a, std::size_t b) {
    const double dx = centroid[a][0] - centroid[b][0];
    const double dy = centroid[a][1] - centroid[b][1];
    const double dz = centroid[a][2] - centroid[b][2];
    return size[a] * size[b] / (size[a] + size[b]) * (dx * dx + dy * dy + dz * dz);
  };
  auto deactivate = [&](std::size_t a) {
    const std::size_t p = pos[a];
    active[p] = active.back();
    pos[active[p]] = p;
    active.pop_back();
  };

  struct Merge
  {
    std::size_t a, b;
    double height;
  };
  std::vector<Merge> merges;
  merges.reserve(n - 1);
  std::vector<std::size_t> chain;
  while (active.size() > 1) {
    if (chain.empty())
      chain.push_back(*std::min_element(active.begin(), active.end()));
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    if (prev != n) {
      best = prev;
      best_d = ward(a, prev);
    }
    for (auto b : active) {
      if (b == a)
        continue;
      const double d = ward(a, b);
      if (d < best_d || (d == best_d && b != prev && best != prev && b < best)) {
        best = b;
        best_d = d;
      }
    }
    if (best == prev) {
      chain.pop_back();
      chain.pop_back();
      const std::size_t keep = std::min(a, prev), gone = std::max(a, prev);
      const double total = size[keep] + size[gone];
      for (int k = 0; k < 3; ++k)
        centroid[keep][k] = (centroid[keep][k] * size[keep] + centroid[gone][k] * size[gone]) / total;
      size[keep] = total;
      deactivate(gone);
      merges.push_back({keep, gone, best_d});
    } else {
      chain.push_back(best);
    }
  }

  // Replay merges by height; stopping one short of the root leaves two groups.
  std::stable_sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) { return x.height < y.height; });
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t m = 0; m + 1 < merges.size(); ++m)
    parent[find(merges[m].b)] = find(merges[m].a);

  const auto top_pos = static_cast<std::size_t>(
    std::lower_bound(members.begin(), members.end(), crown.top_index) - members.begin());
  const std::size_t root = find(top_pos < n ? top_pos : 0);
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i)
    (find(i) == root ? out.first : out.second).push_back(members[i]);
  return out;
}

TrimResult trim_crown(const Crown& crown, const PointCloud& cloud, const RadiusTable& table, double max_outside)
{
  TrimResult out{crown, {}};
  while (out.crown.size() > 1 && outside_fraction(out.crown, cloud, table) > max_outside) {
    auto [keep, evict] = ward_split(out.crown, cloud);
    if (evict.empty())
      break;
    out.evicted.insert(out.evicted.end(), evict.begin(), evict.end());
    out.crown.point_indices = std::move(keep);
    refresh_crown(out.crown, cloud);
  }
  std::sort(out.evicted.begin(), out.evicted.end());
  return out;
}

Segmentation reject_small(Segmentation seg, std::size_t min_points)
{
  for (auto& c : seg.crowns) {
    if (!c.accepted() || c.size() >= min_points)
      continue;
    seg.unassigned.insert(seg.unassigned.end(), c.point_indices.begin(), c.point_indices.end());
    c.point_indices.clear();
    c.status = CrownStatus::rejected;
  }
  std::sort(seg.unassigned.begin(), seg.unassigned.end());
  return seg;
}

std::vector<int> density_clusters(const std::vector<std::size_t>& members, const PointCloud& cloud,
                                  const ConnectivityOptions& options)
{
  const std::size_t n = members.size();
  std::vector<KdTree::Position> pos;
  pos.reserve(n);
  for (auto i : members)
    pos.push_back({cloud[i].x, cloud[i].y, cloud[i].z});
  const KdTree tree(pos, 3);

  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i)
    core[i] = tree.count_within(pos[i], options.eps) >= options.min_neighbors + 1;

  std::vector<int> label(n, -1);
  int next = 0;
  std::vector<std::size_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    if (!core[s] || label[s] >= 0)
      continue;
    const int c = next++;
    label[s] = c;
    queue.assign(1, s);
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      for (auto j : tree.radius(pos[queue[qi]], options.eps)) {
        if (label[j] >= 0)
          continue;
        label[j] = c;
        if (core[j])
          queue.push_back(j);
      }
    }
  }
  return label;
}

TrimResult connectivity_filter(const Crown& crown, const PointCloud& cloud, const ConnectivityOptions& options)
{
  TrimResult out{crown, {}};
  const auto& members = crown.point_indices;
  if (members.empty())
    return out;
  const auto label = density_clusters(members, cloud, options);
  const int clusters = label.empty() ? 0 : *std::max_element(label.begin(), label.end()) + 1;

  int keep = -1;
  const auto top_pos = static_cast<std::size_t>(
    std::lower_bound(members.begin(), members.end(), crown.top_index) - members.begin());
  if (top_pos < members.size() && members[top_pos] == crown.top_index)
    keep = label[top_pos];
  if (keep < 0 && clusters > 0) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(clusters), 0);
    for (int l : label)
      if (l >= 0)
        ++sizes[static_cast<std::size_t>(l)];
    keep = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  }

  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < members.size(); ++i)
    (label[i] == keep && keep >= 0 ? kept : out.evicted).push_back(members[i]);
  out.crown.point_indices = std::move(kept);
  refresh_crown(out.crown, cloud);
  return out;
}

Segmentation refine(Segmentation seg, const PointCloud& cloud, const RadiusTable& table, const RefineOptions& options)
{
  auto assigned = [](const Segmentation& s) {
    std::size_t t = 0;
    for (const auto& c : s.crowns)
      t += c.size();
    return t;
  };
  for (;;) {
    const std::size_t crowns_before = seg.accepted_count();
    const std::size_t points_before = assigned(seg);

    seg = merge_overlaps(std::move(seg), cloud, table);
    for (auto& c : seg.crowns) {
      if (!c.accepted())
        continue;
      auto t = trim_crown(c, cloud, table, options.max_outside);
      seg.unassigned.insert(seg.unassigned.end(), t.evicted.begin(), t.evicted.end());
      c = std::move(t.crown);
      if (options.connectivity) {
        auto k = connectivity_filter(c, cloud, options.density);
        seg.unassigned.insert(seg.unassigned.end(), k.evicted.begin(), k.evicted.end());
        c = std::move(k.crown);
      }
    }
    seg = reject_small(std::move(seg), std::max<std::size_t>(options.min_points, 1));

    if (seg.accepted_count() == crowns_before && assigned(seg) == points_before)
      break;
  }
  return seg;
}

std::vector<std::string> acceptance_violations(const Segmentation& seg, const PointCloud& cloud,
                                               const RadiusTable& table, const RefineOptions& options)
{
  std::vector<std::string> out;
  std::vector<const Crown*> live;
  for (const auto& c : seg.crowns)
    if (c.accepted())
      live.push_back(&c);
  std::sort(live.begin(), live.end(), [](const Crown* a, const Crown* b) { return taller_first(*a, *b); });

  for (const Crown* c : live) {
    const std::string name = "crown " + std::to_string(c->id);
    if (c->size() < options.min_points)
      out.push_back(name + " has " + std::to_string(c->size()) + " points");
    if (outside_fraction(*c, cloud, table) > options.max_outside)
      out.push_back(name + " exceeds the allometric radius");
    if (options.connectivity) {
      const auto label = density_clusters(c->point_indices, cloud, options.density);
      if (std::any_of(label.begin(), label.end(), [](int l) { return l != 0; }))
        out.push_back(name + " is not a single density-connected component");
    }
  }
  for (std::size_t u = 0; u < live.size(); ++u)
    for (std::size_t l = u + 1; l < live.size(); ++l)
      if (live[u]->layer == live[l]->layer && overlap_excessive(*live[u], *live[l], cloud, table))
        out.push_back("crowns " + std::to_string(live[u]->id) + " and " + std::to_string(live[l]->id) +
                      " overlap excessively");
  return out;
}

} // namespace mcgc
