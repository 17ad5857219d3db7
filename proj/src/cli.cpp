#include "mcgc/cli.hpp"

#include "mcgc/biomass.hpp"
#include "mcgc/cloud_io.hpp"
#include "mcgc/error.hpp"
#include "mcgc/graph_weights.hpp"
#include "mcgc/pipeline.hpp"
#include "mcgc/prior.hpp"
#include "mcgc/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#ifndef MCGC_VERSION
#define MCGC_VERSION "0.0.0"
#endif

namespace mcgc::cli {

namespace {

using nlohmann::json;

std::string fmt(double v)
{
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Where data goes: a file, or `out` for "-" and empty paths.
class Sink
{
public:
  Sink(const std::string& path, std::ostream& fallback) : path_(path), stream_(&fallback)
  {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_)
        throw Error(ErrorKind::Resource, "cannot write '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& operator*() { return *stream_; }
  void close()
  {
    stream_->flush();
    if (file_.is_open()) {
      file_.close();
      if (file_.fail())
        throw Error(ErrorKind::Resource, "failed writing '" + path_ + "'");
    }
  }

private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_;
};

std::string read_text(const std::string& path, std::istream& in)
{
  if (path == "-") {
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

PointCloud read_input_cloud(const std::string& path, CloudFormat format, std::istream& in)
{
  if (path == "-")
    return read_cloud(in, format);
  return load_cloud(path, format);
}

/// Clouds without an agh column are normalized against their ground points.
PointCloud normalized(PointCloud cloud, const GroundOptions& ground)
{
  if (cloud.has_agh)
    return cloud;
  return normalize_heights(cloud, ground);
}

AllometrySet allometry_from(const std::string& path)
{
  if (path.empty())
    return AllometrySet{};
  return load_allometry(path);
}

json crowns_json(const Segmentation& seg)
{
  json arr = json::array();
  for (const auto& c : seg.crowns) {
    if (!c.accepted())
      continue;
    arr.push_back({{"id", c.id},
                   {"layer", c.layer},
                   {"top_agh", c.top_agh},
                   {"top_x", c.top_x},
                   {"top_y", c.top_y},
                   {"area_m2", c.area},
                   {"n_points", c.size()}});
  }
  return arr;
}

json trace_json(const PipelineTrace& trace)
{
  json arr = json::array();
  for (const auto& l : trace.layers)
    arr.push_back({{"layer", l.layer},
                   {"candidates", l.candidates},
                   {"sampled", l.sampled},
                   {"landmarks", l.landmarks},
                   {"k_min", l.k_min},
                   {"k_max", l.k_max},
                   {"chosen_k", l.chosen_k},
                   {"accepted", l.accepted}});
  return arr;
}

double cloud_area_ha(const PointCloud& cloud)
{
  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
  for (const auto& p : cloud.points) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  return std::max(0.0, (max_x - min_x) * (max_y - min_y)) / 10000.0;
}

struct SegmentFlags
{
  std::string input = "-";
  std::string format = "auto";
  std::string allometry;
  PipelineConfig cfg;
  std::size_t impute_m = 0;
  double ground_cell = 1.0;
  bool flat_ground = false;

  void add(CLI::App* sub)
  {
    sub->add_option("input", input, "Point cloud file, - or omitted for standard input");
    sub->add_option("--format", format, "auto, xyz, xyzc or xyzca")->capture_default_str();
    sub->add_option("--layers", cfg.layers, "1 or 2")->check(CLI::IsMember({1, 2}))->capture_default_str();
    sub->add_option("--sigma-xy", cfg.params.sigma_xy, "Horizontal length scale, m")->capture_default_str();
    sub->add_option("--sigma-z", cfg.params.sigma_z, "Vertical length scale, m")->capture_default_str();
    sub->add_option("--w-h", cfg.params.w_h, "Horizontal centroid penalty strength")->capture_default_str();
    sub->add_option("--w-z", cfg.params.w_z, "Vertical centroid penalty strength")->capture_default_str();
    sub->add_option("--subsample", cfg.subsample_fraction, "Subsample fraction")->capture_default_str();
    sub->add_option("--nystrom-frac", cfg.nystrom_fraction, "Nystrom landmark fraction")->capture_default_str();
    sub->add_option("--impute-m", impute_m, "Imputation neighbours (default round(1/subsample))");
    sub->add_option("--min-points", cfg.min_points, "Minimum points per crown")->capture_default_str();
    sub->add_option("--min-height", cfg.min_tree_height, "Minimum tree height, m")->capture_default_str();
    sub->add_option("--min-landmarks", cfg.min_landmarks, "Lower bound on Nystrom landmarks")->capture_default_str();
    sub->add_option("--seed", cfg.rng_seed, "Master random seed")->capture_default_str();
    sub->add_option("--allometry", allometry, "Allometry override file");
    sub->add_option("--ground-cell", ground_cell, "Ground grid cell, m")->capture_default_str();
    sub->add_flag("--flat-ground", flat_ground, "Flat ground at the lowest point when no ground class exists");
  }

  PipelineConfig config() const
  {
    PipelineConfig c = cfg;
    if (impute_m > 0)
      c.impute_m = impute_m;
    return c;
  }
};

struct Context
{
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  json inputs = json::array();
  json outputs = json::array();
  std::optional<std::uint64_t> seed;
};

void cmd_normalize(Context& ctx, const std::string& input, const std::string& format, const std::string& out_path,
                   const GroundOptions& ground)
{
  ctx.inputs.push_back(input);
  const PointCloud cloud = read_input_cloud(input, parse_cloud_format(format), ctx.in);
  PointCloud norm = normalize_heights(cloud, ground);
  Sink sink(out_path, ctx.out);
  write_cloud(*sink, norm);
  sink.close();
  ctx.outputs.push_back(out_path.empty() ? "-" : out_path);
}

void cmd_prior(Context& ctx, const std::string& input, const std::string& format, const std::string& out_path,
               const std::string& allom_path, double cell, double min_height, const GroundOptions& ground)
{
  ctx.inputs.push_back(input);
  const AllometrySet allom = allometry_from(allom_path);
  const PointCloud cloud = normalized(read_input_cloud(input, parse_cloud_format(format), ctx.in), ground);
  const auto prior = find_local_maxima(rasterize_chm(cloud, cell), allom, min_height);
  Sink sink(out_path, ctx.out);
  *sink << "# k_min=" << prior.k_min << "\n# k_max=" << prior.k_max << "\nx,y,h\n";
  for (const auto& m : prior.maxima)
    *sink << fmt(m.x) << ',' << fmt(m.y) << ',' << fmt(m.h) << '\n';
  sink.close();
  ctx.outputs.push_back(out_path.empty() ? "-" : out_path);
}

struct SegmentRun
{
  PointCloud cloud;
  Segmentation seg;
  PipelineTrace trace;
  AllometrySet allom;
};

SegmentRun run_segment(Context& ctx, const SegmentFlags& flags)
{
  ctx.inputs.push_back(flags.input);
  SegmentRun r;
  r.allom = allometry_from(flags.allometry);
  GroundOptions ground;
  ground.ground_cell = flags.ground_cell;
  ground.flat_fallback = flags.flat_ground;
  r.cloud = normalized(read_input_cloud(flags.input, parse_cloud_format(flags.format), ctx.in), ground);
  const PipelineConfig cfg = flags.config();
  ctx.seed = cfg.rng_seed;
  r.seg = segment(r.cloud, cfg, r.allom, &r.trace);
  for (const auto& n : r.seg.notices)
    ctx.err << "notice: " << n << '\n';
  return r;
}

void write_labels(std::ostream& os, const PointCloud& cloud, const Segmentation& seg)
{
  const auto labels = seg.labels(cloud.size());
  os << "index,x,y,z,agh,crown_id\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud[i];
    os << i << ',' << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(p.z) << ',' << fmt(p.agh) << ',';
    if (labels[i] < 0)
      os << "UNASSIGNED";
    else
      os << labels[i];
    os << '\n';
  }
}

void cmd_segment(Context& ctx, const SegmentFlags& flags, const std::string& labels_path,
                 const std::string& crowns_path, const std::string& plot_name, const std::string& eigen_path,
                 const std::string& weights_path, long weights_point)
{
  const SegmentRun r = run_segment(ctx, flags);

  Sink labels(labels_path, ctx.out);
  write_labels(*labels, r.cloud, r.seg);
  labels.close();
  ctx.outputs.push_back(labels_path.empty() ? "-" : labels_path);

  if (!crowns_path.empty()) {
    json doc = {{"plot", plot_name},
                {"provenance", to_string(r.seg.provenance)},
                {"n_points", r.cloud.size()},
                {"n_unassigned", r.seg.unassigned.size()},
                {"crowns", crowns_json(r.seg)},
                {"layers", trace_json(r.trace)},
                {"notices", r.seg.notices}};
    Sink sink(crowns_path, ctx.out);
    *sink << doc.dump(2) << '\n';
    sink.close();
    ctx.outputs.push_back(crowns_path);
  }

  if (!eigen_path.empty()) {
    Sink sink(eigen_path, ctx.out);
    *sink << "layer,index,eigenvalue,eigengap\n";
    for (const auto& l : r.trace.layers)
      for (std::size_t i = 0; i < l.eigenvalues.size(); ++i) {
        *sink << l.layer << ',' << i + 1 << ',' << fmt(l.eigenvalues[i]) << ',';
        if (i < l.eigengaps.size())
          *sink << fmt(l.eigengaps[i]);
        *sink << '\n';
      }
    sink.close();
    ctx.outputs.push_back(eigen_path);
  }

  if (!weights_path.empty()) {
    if (weights_point < 0 || static_cast<std::size_t>(weights_point) >= r.cloud.size())
      throw Error(ErrorKind::Parameter, "--weights-point must index a point of the cloud");
    const GraphContext gc = make_graph_context(r.cloud, r.allom, flags.config().params);
    const std::vector<std::size_t> row{static_cast<std::size_t>(weights_point)};
    const Eigen::MatrixXd w = weight_matrix(r.cloud, gc, row);
    Sink sink(weights_path, ctx.out);
    *sink << "index,x,y,z,weight\n";
    for (std::size_t j = 0; j < r.cloud.size(); ++j) {
      const Point& p = r.cloud[j];
      *sink << j << ',' << fmt(p.x) << ',' << fmt(p.y) << ',' << fmt(p.z) << ','
            << fmt(w(0, static_cast<Eigen::Index>(j))) << '\n';
    }
    sink.close();
    ctx.outputs.push_back(weights_path);
  }
}

WoodDensityTable wood_density_from(const std::string& path)
{
  if (path.empty())
    return {};
  std::ifstream f(path);
  if (!f)
    throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  return read_wood_density(f);
}

std::vector<TreeRecord> inventory_from(const std::string& path, std::istream& in)
{
  std::istringstream ss(read_text(path, in));
  return read_inventory(ss);
}

std::vector<CrownMeasure> measures_from(const json& crowns)
{
  std::vector<CrownMeasure> out;
  for (const auto& c : crowns) {
    const double area = c.at("area_m2").get<double>();
    const double h = c.at("top_agh").get<double>();
    if (area > 0.0 && h > 0.0)
      out.push_back({h, area});
  }
  return out;
}

std::string plot_key(const std::string& name) { return name.empty() ? "default" : name; }

Soil majority_soil(const std::vector<const TreeRecord*>& trees)
{
  std::map<Soil, std::size_t> counts;
  for (const auto* t : trees)
    ++counts[t->soil];
  Soil best = Soil::Alluvial;
  std::size_t n = 0;
  for (const auto& [s, c] : counts)
    if (c > n) {
      best = s;
      n = c;
    }
  return best;
}

void cmd_biomass(Context& ctx, const std::vector<std::string>& crown_paths, const std::string& inventory_path,
                 const std::string& wd_path, const std::string& allom_path, double plot_area,
                 const std::string& out_path)
{
  if (crown_paths.empty() && inventory_path.empty())
    throw Error(ErrorKind::Parameter, "biomass needs --crowns and/or --inventory");
  if (!(plot_area > 0.0))
    throw Error(ErrorKind::Parameter, "--plot-area must be positive");
  const AllometrySet allom = allometry_from(allom_path);

  std::map<std::string, double> crown_acd_by_plot;
  std::map<std::string, std::size_t> crown_counts;
  for (const auto& path : crown_paths) {
    ctx.inputs.push_back(path);
    json doc;
    try {
      doc = json::parse(read_text(path, ctx.in));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, path + ": " + e.what());
    }
    const std::string name = plot_key(doc.value("plot", std::string()));
    const auto measures = measures_from(doc.at("crowns"));
    crown_acd_by_plot[name] += plot_acd_crowns(measures, plot_area).plot_acd;
    crown_counts[name] += measures.size();
  }

  std::map<std::string, std::vector<const TreeRecord*>> field_by_plot;
  std::vector<TreeRecord> inventory;
  if (!inventory_path.empty()) {
    ctx.inputs.push_back(inventory_path);
    inventory = inventory_from(inventory_path, ctx.in);
    for (const auto& t : inventory)
      field_by_plot[plot_key(t.plot)].push_back(&t);
  }
  const WoodDensityTable wd = wood_density_from(wd_path);
  if (!wd_path.empty())
    ctx.inputs.push_back(wd_path);

  std::vector<std::string> names;
  for (const auto& [n, v] : crown_acd_by_plot)
    names.push_back(n);
  for (const auto& [n, v] : field_by_plot)
    if (!crown_acd_by_plot.count(n))
      names.push_back(n);
  std::sort(names.begin(), names.end());

  json per_plot = json::array();
  std::vector<double> est, ref;
  std::vector<std::string> groups;
  for (const auto& name : names) {
    json p = {{"plot", name}};
    std::optional<double> crown_acd, field_acd;
    if (auto it = crown_acd_by_plot.find(name); it != crown_acd_by_plot.end()) {
      crown_acd = it->second;
      p["crown_acd"] = *crown_acd;
      p["n_crowns"] = crown_counts[name];
    }
    if (auto it = field_by_plot.find(name); it != field_by_plot.end()) {
      std::vector<TreeRecord> trees;
      for (const auto* t : it->second)
        trees.push_back(*t);
      field_acd = plot_acd_field(trees, wd, allom, plot_area).plot_acd;
      p["field_acd"] = *field_acd;
      p["n_field"] = trees.size();
      p["soil"] = to_string(majority_soil(it->second));
    }
    if (crown_acd && field_acd && *field_acd > 0.0) {
      est.push_back(*crown_acd);
      ref.push_back(*field_acd);
      groups.push_back(p["soil"].get<std::string>());
    }
    per_plot.push_back(std::move(p));
  }

  json doc = {{"per_plot", per_plot}, {"plot_area_ha", plot_area}};
  if (!est.empty()) {
    const auto br = bias_rmse(est, ref);
    doc["bias_pct"] = br.bias_pct;
    doc["rmse_pct"] = br.rmse_pct;
    try {
      doc["correction_factors"] = correction_factor(est, ref, groups);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Degenerate)
        throw;
      doc["correction_factors"] = nullptr;
      ctx.err << "notice: " << e.what() << '\n';
    }
  } else {
    doc["bias_pct"] = nullptr;
    doc["rmse_pct"] = nullptr;
    doc["correction_factors"] = nullptr;
  }
  Sink sink(out_path, ctx.out);
  *sink << doc.dump(2) << '\n';
  sink.close();
  ctx.outputs.push_back(out_path.empty() ? "-" : out_path);
}

void cmd_synth(Context& ctx, const std::string& config_path, bool two_tree, std::optional<std::uint64_t> seed,
               const std::string& allom_path, const std::string& out_path, const std::string& truth_path)
{
  const AllometrySet allom = allometry_from(allom_path);
  SceneSpec spec;
  if (two_tree) {
    spec = two_tree_scene();
  } else {
    if (config_path.empty())
      throw Error(ErrorKind::Parameter, "synth needs --config or --two-tree");
    ctx.inputs.push_back(config_path);
    spec = parse_scene(parse_config(read_text(config_path, ctx.in)), allom);
  }
  if (seed)
    spec.seed = *seed;
  ctx.seed = spec.seed;
  const SynthScene scene = generate_scene(spec, allom);
  Sink sink(out_path, ctx.out);
  write_cloud(*sink, scene.cloud);
  sink.close();
  ctx.outputs.push_back(out_path.empty() ? "-" : out_path);
  if (!truth_path.empty()) {
    Sink truth(truth_path, ctx.out);
    write_truth(*truth, scene.truth);
    truth.close();
    ctx.outputs.push_back(truth_path);
  }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void cmd_report(Context& ctx, const SegmentFlags& flags, const std::string& inventory_path,
                const std::string& wd_path, double plot_area, const std::string& out_path)
{
  const SegmentRun r = run_segment(ctx, flags);
  const double area = plot_area > 0.0 ? plot_area : cloud_area_ha(r.cloud);
  if (!(area > 0.0))
    throw Error(ErrorKind::Parameter, "plot area is zero; pass --plot-area");

  std::vector<TreeRecord> lidar;
  std::vector<CrownMeasure> measures;
  for (const auto& c : r.seg.crowns) {
    if (!c.accepted() || !(c.area > 0.0))
      continue;
    TreeRecord t;
    t.source = TreeSource::lidar;
    t.height = c.top_agh;
    t.crown_diameter = crown_diameter_from_area(c.area);
    t.dbh = dbh_from_height(r.allom, c.top_agh);
    lidar.push_back(t);
    measures.push_back({c.top_agh, c.area});
  }
  std::vector<TreeRecord> field;
  if (!inventory_path.empty()) {
    ctx.inputs.push_back(inventory_path);
    field = inventory_from(inventory_path, ctx.in);
  }
  const auto hist = size_class_counts(field, lidar, r.allom);
  json classes = json::array();
  const auto rates = hist.detection_rate();
  for (std::size_t i = 0; i < hist.field.size(); ++i)
    classes.push_back({{"class", hist.label(i)},
                       {"field", hist.field[i]},
                       {"lidar", hist.lidar[i]},
                       {"detection_rate_pct", number_or_null(rates[i])}});

  PointCloud veg;
  veg.has_agh = true;
  for (const auto& p : r.cloud.points)
    if (p.class_code != class_code::ground)
      veg.points.push_back(p);
  json bio = {{"plot_area_ha", area}, {"crown_acd", plot_acd_crowns(measures, area).plot_acd}};
  if (!veg.empty()) {
    const Raster chm = rasterize_chm(veg);
    const AreaBasedModel model;
    const double tch = top_canopy_height(chm);
    const double gf = gap_fraction(chm);
    bio["tch"] = tch;
    bio["gf19_pct"] = gf;
    bio["area_general_acd"] = model.general(tch);
    bio["area_local_acd"] = gf > 0.0 ? json(model.local(tch, gf)) : json(nullptr);
  }
  if (!field.empty()) {
    const WoodDensityTable wd = wood_density_from(wd_path);
    bio["field_acd"] = plot_acd_field(field, wd, r.allom, area).plot_acd;
  }

  json doc = {{"crowns", crowns_json(r.seg)},
              {"layers", trace_json(r.trace)},
              {"size_classes", classes},
              {"biomass", bio},
              {"notices", r.seg.notices}};
  Sink sink(out_path, ctx.out);
  *sink << doc.dump(2) << '\n';
  sink.close();
  ctx.outputs.push_back(out_path.empty() ? "-" : out_path);
}

int exit_code_for(ErrorKind kind) { return kind == ErrorKind::Resource ? exit_resource : exit_input; }

} // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err)
{
  const auto start = std::chrono::steady_clock::now();
  CLI::App app{"Tree crown segmentation by normalized graph cut, with biomass estimation", "mcgc"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", MCGC_VERSION);
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "Write the run manifest here instead of standard error");
  app.fallthrough();

  std::string out_path;
  std::string input = "-", format = "auto", allom_path;
  double ground_cell = 1.0;
  bool flat_ground = false;

  auto* normalize = app.add_subcommand("normalize", "Compute above-ground heights from the ground points");
  normalize->add_option("input", input, "Point cloud file, - or omitted for standard input");
  normalize->add_option("--format", format, "auto, xyz, xyzc or xyzca")->capture_default_str();
  normalize->add_option("--out", out_path, "Output cloud (default standard output)");
  normalize->add_option("--ground-cell", ground_cell, "Ground grid cell, m")->capture_default_str();
  normalize->add_flag("--flat-ground", flat_ground, "Flat ground at the lowest point when no ground class exists");

  double cell = 0.5, min_height = 2.0;
  auto* prior = app.add_subcommand("prior", "Tree tops and the cluster-count range from the canopy height model");
  prior->add_option("input", input, "Point cloud file, - or omitted for standard input");
  prior->add_option("--format", format, "auto, xyz, xyzc or xyzca")->capture_default_str();
  prior->add_option("--out", out_path, "Output CSV (default standard output)");
  prior->add_option("--allometry", allom_path, "Allometry override file");
  prior->add_option("--cell", cell, "CHM cell size, m")->capture_default_str();
  prior->add_option("--min-height", min_height, "Minimum tree height, m")->capture_default_str();
  prior->add_option("--ground-cell", ground_cell, "Ground grid cell, m")->capture_default_str();
  prior->add_flag("--flat-ground", flat_ground, "Flat ground at the lowest point when no ground class exists");

  SegmentFlags seg_flags;
  std::string labels_path, crowns_path, plot_name, eigen_path, weights_path;
  long weights_point = 0;
  auto* seg = app.add_subcommand("segment", "Segment tree crowns");
  seg_flags.add(seg);
  seg->add_option("--out,--labels", labels_path, "Point-label CSV (default standard output)");
  seg->add_option("--crowns", crowns_path, "Crown-summary JSON");
  seg->add_option("--plot", plot_name, "Plot name recorded in the crown summary");
  seg->add_option("--dump-eigen", eigen_path, "Eigenvalues and eigengaps as CSV");
  seg->add_option("--dump-weights", weights_path, "Weight row of --weights-point as CSV");
  seg->add_option("--weights-point", weights_point, "Point index for --dump-weights")->capture_default_str();

  std::vector<std::string> crown_files;
  std::string inventory_path, wd_path;
  double plot_area = 1.0;
  auto* bio = app.add_subcommand("biomass", "Plot carbon from crowns and/or a field inventory");
  bio->add_option("--crowns", crown_files, "Crown-summary JSON, one per plot");
  bio->add_option("--inventory", inventory_path, "Field inventory CSV");
  bio->add_option("--wood-density", wd_path, "Wood density CSV (level,name,density)");
  bio->add_option("--allometry", allom_path, "Allometry override file");
  bio->add_option("--plot-area", plot_area, "Plot area, ha")->capture_default_str();
  bio->add_option("--out", out_path, "Metrics JSON (default standard output)");

  std::string config_path, truth_path;
  bool two_tree = false;
  std::optional<std::uint64_t> synth_seed;
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic forest cloud");
  synth->add_option("--config", config_path, "Scene file");
  synth->add_flag("--two-tree", two_tree, "Built-in 30 m / 20 m two-tree scene");
  synth->add_option("--seed", synth_seed, "Override the scene seed");
  synth->add_option("--allometry", allom_path, "Allometry override file");
  synth->add_option("--out", out_path, "Output cloud (default standard output)");
  synth->add_option("--truth", truth_path, "Per-point truth CSV");

  SegmentFlags report_flags;
  double report_area = 0.0;
  auto* report = app.add_subcommand("report", "Segment and summarise crowns, size classes and biomass");
  report_flags.add(report);
  report->add_option("--inventory", inventory_path, "Field inventory CSV");
  report->add_option("--wood-density", wd_path, "Wood density CSV (level,name,density)");
  report->add_option("--plot-area", report_area, "Plot area, ha (default: cloud extent)");
  report->add_option("--out", out_path, "Report JSON (default standard output)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_input;
  }

  Context ctx{in, out, err, json::array(), json::array(), std::nullopt};
  GroundOptions ground;
  ground.ground_cell = ground_cell;
  ground.flat_fallback = flat_ground;
  std::string command;
  try {
    if (normalize->parsed()) {
      command = "normalize";
      cmd_normalize(ctx, input, format, out_path, ground);
    } else if (prior->parsed()) {
      command = "prior";
      cmd_prior(ctx, input, format, out_path, allom_path, cell, min_height, ground);
    } else if (seg->parsed()) {
      command = "segment";
      cmd_segment(ctx, seg_flags, labels_path, crowns_path, plot_name, eigen_path, weights_path, weights_point);
    } else if (bio->parsed()) {
      command = "biomass";
      cmd_biomass(ctx, crown_files, inventory_path, wd_path, allom_path, plot_area, out_path);
    } else if (synth->parsed()) {
      command = "synth";
      cmd_synth(ctx, config_path, two_tree, synth_seed, allom_path, out_path, truth_path);
    } else if (report->parsed()) {
      command = "report";
      cmd_report(ctx, report_flags, inventory_path, wd_path, report_area, out_path);
    }
  } catch (const Error& e) {
    err << "mcgc " << command << ": " << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::bad_alloc&) {
    err << "mcgc " << command << ": out of memory\n";
    return exit_resource;
  } catch (const std::exception& e) {
    err << "mcgc " << command << ": " << e.what() << '\n';
    return exit_input;
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest = {{"command", command},
                   {"args", args},
                   {"seed", ctx.seed ? json(*ctx.seed) : json(nullptr)},
                   {"inputs", ctx.inputs},
                   {"outputs", ctx.outputs},
                   {"version", MCGC_VERSION},
                   {"duration_s", seconds}};
  if (manifest_path.empty()) {
    err << manifest.dump() << '\n';
  } else {
    std::ofstream m(manifest_path);
    if (!m) {
      err << "mcgc: cannot write manifest '" << manifest_path << "'\n";
      return exit_resource;
    }
    m << manifest.dump(2) << '\n';
  }
  return exit_ok;
}

int run(int argc, char** argv)
{
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cin, std::cout, std::cerr);
}

} // namespace mcgc::cli
