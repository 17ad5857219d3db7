#include "mcgc/synth.hpp"

#include "mcgc/error.hpp"
#include "mcgc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace mcgc {

double resolved_crown_diameter(const SynthTree& tree, const AllometrySet& allom)
{
  return tree.crown_diameter > 0.0 ? tree.crown_diameter : crown_diameter(allom, tree.height, CrownPercentile::p50);
}

bool inside_crown(const SynthTree& tree, const AllometrySet& allom, double x, double y, double agh)
{
  const double r = resolved_crown_diameter(tree, allom) / 2.0;
  const double depth = tree.height * tree.crown_depth_fraction;
  const double base = tree.height - depth;
  if (agh < base || agh > tree.height)
    return false;
  const double rho2 = ((x - tree.x) * (x - tree.x) + (y - tree.y) * (y - tree.y)) / (r * r);
  const double t = (agh - base) / depth;
  if (tree.shape == CrownShape::cone)
    return std::sqrt(rho2) <= 1.0 - t;
  return rho2 + t * t <= 1.0;
}

SynthScene generate_scene(const SceneSpec& spec, const AllometrySet& allom)
{
  if (!(spec.max_x > spec.min_x) || !(spec.max_y > spec.min_y))
    throw Error(ErrorKind::Parameter, "scene extent must have positive width and depth");
  if (!(spec.ground_density > 0.0) || spec.stem_density < 0.0 || spec.noise_sd < 0.0)
    throw Error(ErrorKind::Parameter, "scene densities must be positive and noise non-negative");
  for (const auto& t : spec.trees) {
    if (!(t.height > 0.0) || !(t.crown_depth_fraction > 0.0) || t.crown_depth_fraction > 1.0 ||
        !(t.point_density > 0.0) || t.crown_diameter < 0.0)
      throw Error(ErrorKind::Parameter, "tree " + std::to_string(t.label) + " has invalid dimensions");
  }

  Rng rng(spec.seed);
  SynthScene scene;
  scene.cloud.has_agh = true;
  scene.cloud.crs_note = "synthetic";
  auto emit = [&](double x, double y, double agh, int cls, int truth) {
    double z = spec.ground_z(x, y) + agh;
    if (spec.noise_sd > 0.0) {
      x += spec.noise_sd * rng.normal();
      y += spec.noise_sd * rng.normal();
      z += spec.noise_sd * rng.normal();
    }
    Point p;
    p.x = x;
    p.y = y;
    p.z = z;
    p.class_code = cls;
    p.agh = std::max(0.0, z - spec.ground_z(x, y));
    scene.cloud.points.push_back(p);
    scene.truth.push_back(truth);
  };

  const double area = (spec.max_x - spec.min_x) * (spec.max_y - spec.min_y);
  const auto n_ground = static_cast<std::size_t>(std::llround(spec.ground_density * area));
  for (std::size_t i = 0; i < n_ground; ++i) {
    const double x = rng.uniform(spec.min_x, spec.max_x);
    const double y = rng.uniform(spec.min_y, spec.max_y);
    emit(x, y, 0.0, class_code::ground, -1);
  }

  for (const auto& t : spec.trees) {
    const double r = resolved_crown_diameter(t, allom) / 2.0;
    const double depth = t.height * t.crown_depth_fraction;
    const double base = t.height - depth;

    const auto n_stem = static_cast<std::size_t>(std::llround(spec.stem_density * base));
    for (std::size_t i = 0; i < n_stem; ++i)
      emit(t.x, t.y, rng.uniform(0.0, base), class_code::unclassified, t.label);

    emit(t.x, t.y, t.height, class_code::unclassified, t.label);
    const double volume = t.shape == CrownShape::cone ? M_PI * r * r * depth / 3.0 : 2.0 / 3.0 * M_PI * r * r * depth;
    const auto n_crown = static_cast<std::size_t>(std::llround(t.point_density * volume));
    for (std::size_t i = 0; i < n_crown;) {
      const double x = t.x + rng.uniform(-r, r);
      const double y = t.y + rng.uniform(-r, r);
      const double h = rng.uniform(base, t.height);
      if (!inside_crown(t, allom, x, y, h))
        continue;
      emit(x, y, h, class_code::unclassified, t.label);
      ++i;
    }
  }
  return scene;
}

SceneSpec two_tree_scene(std::uint64_t seed)
{
  SceneSpec s;
  s.min_x = 0.0;
  s.max_x = 26.0;
  s.min_y = 0.0;
  s.max_y = 20.0;
  s.seed = seed;
  s.stem_density = 0.0;
  SynthTree tall;
  tall.x = 10.0;
  tall.y = 10.0;
  tall.height = 30.0;
  tall.crown_depth_fraction = 0.15;
  tall.label = 0;
  SynthTree short_tree = tall;
  short_tree.x = 16.0;
  short_tree.height = 20.0;
  short_tree.label = 1;
  s.trees = {tall, short_tree};
  return s;
}

SceneSpec occlusion_scene(std::uint64_t seed)
{
  SceneSpec s;
  s.seed = seed;
  s.stem_density = 0.0;
  SynthTree emergent;
  emergent.x = 15.0;
  emergent.y = 15.0;
  emergent.height = 40.0;
  emergent.crown_diameter = 10.0;
  emergent.crown_depth_fraction = 0.15;
  emergent.label = 0;
  s.trees.push_back(emergent);
  for (int u = 0; u < 2; ++u) {
    SynthTree t;
    t.x = u == 0 ? 18.0 : 12.0;
    t.y = 15.0;
    t.height = 16.0;
    t.crown_diameter = 3.5;
    t.crown_depth_fraction = 0.25;
    t.label = u + 1;
    s.trees.push_back(t);
  }
  return s;
}

SceneSpec random_plot(double side, std::size_t canopy, std::size_t understory, std::uint64_t seed,
                      const AllometrySet& allom)
{
  if (!(side > 0.0))
    throw Error(ErrorKind::Parameter, "plot side must be positive");
  SceneSpec s;
  s.max_x = side;
  s.max_y = side;
  s.ground_density = 3.5; // about 7 points/m² overall with 20 canopy trees per hectare
  s.seed = derive_seed(seed, 0);
  Rng rng(derive_seed(seed, 1));

  auto place = [&](double h_lo, double h_hi, bool canopy_tree) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      SynthTree t;
      t.height = rng.uniform(h_lo, h_hi);
      const double r = resolved_crown_diameter(t, allom) / 2.0;
      t.x = rng.uniform(r, side - r);
      t.y = rng.uniform(r, side - r);
      bool ok = true;
      for (const auto& o : s.trees) {
        const double ro = resolved_crown_diameter(o, allom) / 2.0;
        const double d = std::hypot(t.x - o.x, t.y - o.y);
        const bool same_layer = (o.height >= 20.0) == canopy_tree;
        if (d < (same_layer ? r + ro + 1.0 : 2.0)) {
          ok = false;
          break;
        }
      }
      if (ok) {
        t.label = static_cast<int>(s.trees.size());
        s.trees.push_back(t);
        return;
      }
    }
  };
  for (std::size_t i = 0; i < canopy; ++i)
    place(25.0, 42.0, true);
  for (std::size_t i = 0; i < understory; ++i)
    place(8.0, 16.0, false);
  return s;
}

SceneSpec parse_scene(const ConfigDocument& doc, const AllometrySet& allom)
{
  const ConfigTable& t = doc.root;
  for (const auto& [key, value] : t.values()) {
    static const char* known[] = {"min_x",      "min_y",         "max_x",        "max_y",   "base_z",
                                  "slope_x",    "slope_y",       "noise_sd",     "ground_density",
                                  "stem_density", "seed",        "random.trees", "random.understory",
                                  "random.side", "random.seed", "ground"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
      throw Error(ErrorKind::Config, "unknown scene key '" + key + "'");
  }

  SceneSpec s;
  if (t.has("random.trees")) {
    const double side = t.number("random.side", 100.0);
    s = random_plot(side, static_cast<std::size_t>(t.number("random.trees")),
                    static_cast<std::size_t>(t.number("random.understory", 0.0)),
                    static_cast<std::uint64_t>(t.number("random.seed", 0.0)), allom);
  }
  s.min_x = t.number("min_x", s.min_x);
  s.min_y = t.number("min_y", s.min_y);
  s.max_x = t.number("max_x", s.max_x);
  s.max_y = t.number("max_y", s.max_y);
  s.base_z = t.number("base_z", s.base_z);
  const std::string ground = t.text("ground", "flat");
  if (ground == "tilted") {
    s.slope_x = t.number("slope_x", 0.0);
    s.slope_y = t.number("slope_y", 0.0);
  } else if (ground != "flat") {
    throw Error(ErrorKind::Config, "ground must be \"flat\" or \"tilted\"");
  }
  s.noise_sd = t.number("noise_sd", s.noise_sd);
  s.ground_density = t.number("ground_density", s.ground_density);
  s.stem_density = t.number("stem_density", s.stem_density);
  s.seed = static_cast<std::uint64_t>(t.number("seed", static_cast<double>(s.seed)));

  if (auto it = doc.arrays.find("tree"); it != doc.arrays.end()) {
    for (const auto& tt : it->second) {
      SynthTree tree;
      tree.x = tt.number("x");
      tree.y = tt.number("y");
      tree.height = tt.number("height");
      tree.crown_diameter = tt.number("crown_diameter", 0.0);
      tree.crown_depth_fraction = tt.number("crown_depth_fraction", tree.crown_depth_fraction);
      tree.point_density = tt.number("point_density", tree.point_density);
      const std::string shape = tt.text("shape", "ellipsoid");
      if (shape == "cone")
        tree.shape = CrownShape::cone;
      else if (shape != "ellipsoid")
        throw Error(ErrorKind::Config, "tree shape must be \"ellipsoid\" or \"cone\"");
      tree.label = static_cast<int>(tt.number("label", static_cast<double>(s.trees.size())));
      s.trees.push_back(tree);
    }
  }
  return s;
}

TruthScore score_against_truth(const Segmentation& seg, const std::vector<int>& truth, const PointCloud& cloud,
                               double height_floor)
{
  if (truth.size() != cloud.size())
    throw Error(ErrorKind::Contract, "truth labels must cover the cloud");
  const auto pred = seg.labels(cloud.size());

  std::map<std::pair<int, int>, std::size_t> overlap;
  std::map<int, std::size_t> tree_sizes;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (truth[i] >= 0)
      ++tree_sizes[truth[i]];
    if (pred[i] >= 0 && truth[i] >= 0)
      ++overlap[{pred[i], truth[i]}];
  }
  std::vector<std::pair<std::pair<int, int>, std::size_t>> pairs(overlap.begin(), overlap.end());
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::map<int, int> crown_to_tree;
  std::map<int, bool> tree_taken;
  for (const auto& [key, count] : pairs) {
    const auto [crown, tree] = key;
    if (crown_to_tree.count(crown) || tree_taken[tree])
      continue;
    crown_to_tree[crown] = tree;
    tree_taken[tree] = true;
  }

  TruthScore s;
  s.matched = crown_to_tree.size();
  s.crowns = seg.accepted_count();
  s.trees = tree_sizes.size();
  s.precision = s.crowns == 0 ? (s.trees == 0 ? 1.0 : 0.0) : static_cast<double>(s.matched) / static_cast<double>(s.crowns);
  s.recall = s.trees == 0 ? 1.0 : static_cast<double>(s.matched) / static_cast<double>(s.trees);

  std::size_t considered = 0, correct = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud[i].class_code == class_code::ground || cloud[i].agh < height_floor)
      continue;
    ++considered;
    if (pred[i] < 0) {
      correct += truth[i] < 0;
    } else if (auto it = crown_to_tree.find(pred[i]); it != crown_to_tree.end() && it->second == truth[i]) {
      ++correct;
    }
  }
  s.point_accuracy = considered == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(considered);
  return s;
}

void write_truth(std::ostream& out, const std::vector<int>& truth)
{
  out << "index,truth\n";
  for (std::size_t i = 0; i < truth.size(); ++i)
    out << i << ',' << truth[i] << '\n';
}

} // namespace mcgc
