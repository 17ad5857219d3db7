#include "mcgc/pipeline.hpp"

#include "mcgc/cloud_io.hpp"
#include "mcgc/error.hpp"
#include "mcgc/geometry.hpp"
#include "mcgc/prior.hpp"
#include "mcgc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace mcgc {

std::size_t PipelineConfig::effective_impute_m() const
{
  if (impute_m)
    return *impute_m;
  return static_cast<std::size_t>(std::max(1L, std::lround(1.0 / subsample_fraction)));
}

void PipelineConfig::validate() const
{
  params.validate();
  if (layers != 1 && layers != 2)
    throw Error(ErrorKind::Parameter, "layers must be 1 or 2");
  if (!(subsample_fraction > 0.0) || subsample_fraction > 1.0)
    throw Error(ErrorKind::Parameter, "subsample fraction must lie in (0, 1]");
  if (!(nystrom_fraction > 0.0) || nystrom_fraction > 1.0)
    throw Error(ErrorKind::Parameter, "Nystrom fraction must lie in (0, 1]");
  if (impute_m && *impute_m == 0)
    throw Error(ErrorKind::Parameter, "impute_m must be at least 1");
  if (!(min_tree_height >= 0.0))
    throw Error(ErrorKind::Parameter, "min_tree_height must be non-negative");
  if (kmeans.restarts == 0 || kmeans.max_iter == 0)
    throw Error(ErrorKind::Parameter, "k-means restarts and iterations must be positive");
}

Subsample subsample(const PointCloud& cloud, double fraction, std::uint64_t rng_seed)
{
  if (!(fraction > 0.0) || fraction > 1.0)
    throw Error(ErrorKind::Parameter, "subsample fraction must lie in (0, 1]");
  Subsample out;
  const std::size_t n = cloud.size();
  const auto count = std::min(n, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n))));
  if (count == n) {
    out.kept.resize(n);
    std::iota(out.kept.begin(), out.kept.end(), std::size_t{0});
  } else {
    Rng rng(rng_seed);
    out.kept = rng.sample_without_replacement(n, count);
    std::sort(out.kept.begin(), out.kept.end());
  }
  out.cloud = cloud.subset(out.kept);
  return out;
}

Segmentation impute_labels(const PointCloud& full, const Segmentation& sub_seg, const std::vector<std::size_t>& kept,
                           std::size_t m, const RadiusTable& table)
{
  if (m == 0 || m > kept.size())
    throw Error(ErrorKind::Parameter, "imputation needs 1 <= m <= " + std::to_string(kept.size()) + " (m = " +
                                        std::to_string(m) + ")");
  // crown position per sampled point, -1 when unassigned
  std::vector<int> sub_label(kept.size(), -1);
  for (std::size_t c = 0; c < sub_seg.crowns.size(); ++c)
    for (auto i : sub_seg.crowns[c].point_indices) {
      if (i >= kept.size())
        throw Error(ErrorKind::Contract, "sub-segmentation refers to a point outside the sample");
      sub_label[i] = static_cast<int>(c);
    }

  std::vector<long> sample_pos(full.size(), -1);
  std::vector<KdTree::Position> pos;
  pos.reserve(kept.size());
  for (std::size_t s = 0; s < kept.size(); ++s) {
    sample_pos.at(kept[s]) = static_cast<long>(s);
    const Point& p = full[kept[s]];
    pos.push_back({p.x, p.y, p.z});
  }
  const KdTree tree(std::move(pos), 3);

  std::vector<std::vector<std::size_t>> members(sub_seg.crowns.size());
  Segmentation out;
  out.provenance = sub_seg.provenance;
  out.notices = sub_seg.notices;
  std::vector<std::pair<int, std::size_t>> votes;
  for (std::size_t j = 0; j < full.size(); ++j) {
    int label = -1;
    if (sample_pos[j] >= 0) {
      label = sub_label[static_cast<std::size_t>(sample_pos[j])];
    } else {
      const Point& p = full[j];
      const auto nbrs = tree.nearest({p.x, p.y, p.z}, m);
      votes.clear();
      for (auto s : nbrs) {
        const int l = sub_label[s];
        auto it = std::find_if(votes.begin(), votes.end(), [l](const auto& v) { return v.first == l; });
        if (it == votes.end())
          votes.emplace_back(l, 1);
        else
          ++it->second;
      }
      // votes are in order of first appearance, i.e. of nearest voter
      std::size_t best = 0;
      for (std::size_t v = 1; v < votes.size(); ++v)
        if (votes[v].second > votes[best].second)
          best = v;
      label = votes[best].first;
      if (label >= 0) {
        const Crown& c = sub_seg.crowns[static_cast<std::size_t>(label)];
        if (std::hypot(p.x - c.top_x, p.y - c.top_y) > table.max_radius(c.top_agh))
          label = -1;
      }
    }
    if (label >= 0)
      members[static_cast<std::size_t>(label)].push_back(j);
    else
      out.unassigned.push_back(j);
  }

  for (std::size_t c = 0; c < sub_seg.crowns.size(); ++c) {
    Crown crown = sub_seg.crowns[c];
    crown.point_indices = std::move(members[c]);
    refresh_crown(crown, full);
    out.crowns.push_back(std::move(crown));
  }
  return out;
}

namespace {

constexpr std::uint64_t stage_subsample = 1;
constexpr std::uint64_t stage_landmarks = 2;
constexpr std::uint64_t stage_kmeans = 3;

std::uint64_t stage_seed(std::uint64_t master, int layer, std::uint64_t stage)
{
  return derive_seed(master, static_cast<std::uint64_t>(layer) * 16 + stage);
}

/// Graph cut on the candidate cloud; returns crowns over candidate indices.
Segmentation cut_candidates(const PointCloud& cand, const PipelineConfig& cfg, const AllometrySet& allom,
                            const RadiusTable& table, int layer, LayerTrace& trace)
{
  Segmentation out;
  const auto prior = find_local_maxima(rasterize_chm(cand), allom, cfg.min_tree_height);
  trace.k_min = prior.k_min;
  trace.k_max = prior.k_max;
  if (prior.k_min == 0) {
    out.notices.push_back("layer " + std::to_string(layer) + ": no tree tops found in the canopy height model");
    out.unassigned.resize(cand.size());
    std::iota(out.unassigned.begin(), out.unassigned.end(), std::size_t{0});
    return out;
  }

  const double fraction = cfg.subsample_fraction;
  const Subsample sub = subsample(cand, fraction, stage_seed(cfg.rng_seed, layer, stage_subsample));
  const PointCloud& pts = sub.cloud;
  const std::size_t n = pts.size();
  trace.sampled = n;

  Segmentation coarse;
  if (n < 2) {
    coarse.crowns.push_back(make_crown(0, {0}, pts, layer));
  } else {
    const auto ctx = make_graph_context(pts, allom, cfg.params);
    std::size_t k_upper = std::min(prior.k_max, n - 1);
    const auto by_fraction = static_cast<std::size_t>(std::ceil(cfg.nystrom_fraction * static_cast<double>(n)));
    const std::size_t landmarks = std::min(n, std::max({by_fraction, cfg.min_landmarks, k_upper + 1}));
    trace.landmarks = landmarks;
    const auto ny = nystrom_eigs_sized(pts, ctx, landmarks, k_upper, stage_seed(cfg.rng_seed, layer, stage_landmarks));
    const auto& vals = ny.eig.values;
    trace.eigenvalues.assign(vals.data(), vals.data() + vals.size());
    trace.eigengaps = eigengaps(trace.eigenvalues);
    if (trace.eigenvalues.empty())
      throw Error(ErrorKind::Degenerate, "graph has no usable spectrum");

    k_upper = std::min(k_upper, trace.eigenvalues.size() - 1);
    std::size_t k = 1;
    if (k_upper >= 1)
      k = choose_k(trace.eigenvalues, std::clamp<std::size_t>(prior.k_min, 1, k_upper), k_upper);
    const auto emb = spectral_embedding(ny.eig.vectors, std::max<std::size_t>(k, 1));

    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < n; ++i)
      if (!emb.degenerate[i])
        live.push_back(i);
    if (live.empty())
      throw Error(ErrorKind::Degenerate, "every embedding row is zero");
    k = std::min(k, live.size());
    trace.chosen_k = k;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(live.size()), emb.rows.cols());
    for (std::size_t r = 0; r < live.size(); ++r)
      x.row(static_cast<Eigen::Index>(r)) = emb.rows.row(static_cast<Eigen::Index>(live[r]));
    const auto fit = kmeans_assign(x, k, stage_seed(cfg.rng_seed, layer, stage_kmeans), cfg.kmeans);

    std::vector<int> label(n, -1);
    for (std::size_t r = 0; r < live.size(); ++r)
      label[live[r]] = fit.labels[r];
    if (live.size() < n) {
      std::vector<KdTree::Position> lp;
      for (auto i : live)
        lp.push_back({pts[i].x, pts[i].y, pts[i].z});
      const KdTree tree(std::move(lp), 3);
      for (std::size_t i = 0; i < n; ++i)
        if (label[i] < 0)
          label[i] = label[live[tree.nearest({pts[i].x, pts[i].y, pts[i].z}, 1).front()]];
    }

    std::vector<std::vector<std::size_t>> groups(k);
    for (std::size_t i = 0; i < n; ++i)
      groups[static_cast<std::size_t>(label[i])].push_back(i);
    for (std::size_t c = 0; c < k; ++c)
      coarse.crowns.push_back(make_crown(static_cast<int>(c), std::move(groups[c]), pts, layer));
  }

  RefineOptions opts;
  opts.min_points = cfg.min_points;
  if (fraction < 1.0) {
    RefineOptions coarse_opts = opts;
    coarse_opts.min_points =
      static_cast<std::size_t>(std::max(1L, std::lround(static_cast<double>(cfg.min_points) * fraction)));
    coarse_opts.connectivity = false;
    coarse = refine(std::move(coarse), pts, table, coarse_opts);
    const std::size_t m = std::min(cfg.effective_impute_m(), sub.kept.size());
    coarse = impute_labels(cand, coarse, sub.kept, m, table);
  }
  out = refine(std::move(coarse), cand, table, opts);
  return out;
}

Segmentation run_layer(const PointCloud& cloud, const PipelineConfig& cfg, const AllometrySet& allom, int layer,
                       PipelineTrace* trace)
{
  cfg.validate();
  Segmentation out;
  out.provenance = layer == 1 ? Provenance::layer1 : Provenance::layer2;
  LayerTrace lt;
  lt.layer = layer;
  if (cloud.empty()) {
    if (trace)
      trace->layers.push_back(lt);
    return out;
  }
  if (!cloud.has_agh)
    throw Error(ErrorKind::Contract, "segmentation requires a normalized cloud");

  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud[i];
    if (p.class_code != class_code::ground && p.agh >= cfg.min_tree_height && p.agh > 0.0)
      cand.push_back(i);
    else
      out.unassigned.push_back(i);
  }
  lt.candidates = cand.size();

  if (cand.empty()) {
    out.notices.push_back("layer " + std::to_string(layer) + ": no points above the minimum tree height");
  } else {
    const RadiusTable table(allom);
    const PointCloud cc = cloud.subset(cand);
    Segmentation local = cut_candidates(cc, cfg, allom, table, layer, lt);
    local.compact();
    std::sort(local.crowns.begin(), local.crowns.end(), [&](const Crown& a, const Crown& b) {
      if (a.top_agh != b.top_agh)
        return a.top_agh > b.top_agh;
      return cand[a.top_index] < cand[b.top_index];
    });
    for (std::size_t c = 0; c < local.crowns.size(); ++c) {
      Crown crown = local.crowns[c];
      crown.id = static_cast<int>(c);
      crown.layer = layer;
      for (auto& i : crown.point_indices)
        i = cand[i];
      refresh_crown(crown, cloud);
      out.crowns.push_back(std::move(crown));
    }
    for (auto i : local.unassigned)
      out.unassigned.push_back(cand[i]);
    std::sort(out.unassigned.begin(), out.unassigned.end());
    out.notices.insert(out.notices.end(), local.notices.begin(), local.notices.end());
  }
  lt.accepted = out.crowns.size();
  if (trace)
    trace->layers.push_back(lt);
  return out;
}

} // namespace

Segmentation segment_single_layer(const PointCloud& cloud, const PipelineConfig& cfg, const AllometrySet& allom,
                                  PipelineTrace* trace)
{
  return run_layer(cloud, cfg, allom, 1, trace);
}

Segmentation segment_double_layer(const PointCloud& cloud, const PipelineConfig& cfg, const AllometrySet& allom,
                                  PipelineTrace* trace)
{
  Segmentation first = run_layer(cloud, cfg, allom, 1, trace);

  std::vector<std::size_t> residual, keep_unassigned;
  for (auto i : first.unassigned) {
    const Point& p = cloud[i];
    if (p.class_code != class_code::ground && p.agh >= cfg.min_tree_height && p.agh > 0.0)
      residual.push_back(i);
    else
      keep_unassigned.push_back(i);
  }
  if (residual.size() < cfg.min_points) {
    first.notices.push_back("layer 2 skipped: " + std::to_string(residual.size()) +
                            " residual points is below the minimum crown size");
    return first;
  }

  const Segmentation second = run_layer(cloud.subset(residual), cfg, allom, 2, trace);
  Segmentation out = std::move(first);
  out.provenance = Provenance::merged;
  const int offset = static_cast<int>(out.crowns.size());
  for (const auto& c : second.crowns) {
    Crown crown = c;
    crown.id += offset;
    for (auto& i : crown.point_indices)
      i = residual[i];
    refresh_crown(crown, cloud);
    out.crowns.push_back(std::move(crown));
  }
  out.unassigned = std::move(keep_unassigned);
  for (auto i : second.unassigned)
    out.unassigned.push_back(residual[i]);
  std::sort(out.unassigned.begin(), out.unassigned.end());
  out.notices.insert(out.notices.end(), second.notices.begin(), second.notices.end());
  return out;
}

Segmentation segment(const PointCloud& cloud, const PipelineConfig& cfg, const AllometrySet& allom,
                     PipelineTrace* trace)
{
  cfg.validate();
  return cfg.layers == 2 ? segment_double_layer(cloud, cfg, allom, trace)
                         : segment_single_layer(cloud, cfg, allom, trace);
}

} // namespace mcgc
