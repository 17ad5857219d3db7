#include "mcgc/biomass.hpp"

#include "mcgc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>

namespace mcgc {

namespace {

std::string trim(std::string_view s)
{
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line)
{
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                       : comma - start)));
    if (comma == std::string::npos)
      break;
    start = comma + 1;
  }
  return out;
}

double parse_number(const std::string& s, int line, const std::string& what)
{
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": bad " + what + " '" + s + "'");
  return v;
}

bool blank_or_comment(const std::string& line)
{
  const std::string t = trim(line);
  return t.empty() || t.front() == '#';
}

} // namespace

void WoodDensityTable::validate() const
{
  auto check = [](const std::map<std::string, double>& m, const char* level) {
    for (const auto& [name, v] : m)
      if (!(v > 0.0))
        throw Error(ErrorKind::Config, std::string(level) + " density for '" + name + "' must be positive");
  };
  check(species_map, "species");
  check(genus_map, "genus");
  check(family_map, "family");
  if (plot_mean < 0.0)
    throw Error(ErrorKind::Config, "plot mean density must be positive");
}

double WoodDensityTable::resolve(const TreeRecord& tree) const
{
  if (tree.wood_density > 0.0)
    return tree.wood_density;
  if (auto it = species_map.find(tree.species); !tree.species.empty() && it != species_map.end())
    return it->second;
  if (auto it = genus_map.find(tree.genus); !tree.genus.empty() && it != genus_map.end())
    return it->second;
  if (auto it = family_map.find(tree.family); !tree.family.empty() && it != family_map.end())
    return it->second;
  if (plot_mean > 0.0)
    return plot_mean;
  if (!species_map.empty()) {
    double sum = 0.0;
    for (const auto& [name, v] : species_map)
      sum += v;
    return sum / static_cast<double>(species_map.size());
  }
  throw Error(ErrorKind::Config, "no wood density available for species '" + tree.species + "'");
}

WoodDensityTable read_wood_density(std::istream& in)
{
  WoodDensityTable t;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (blank_or_comment(line))
      continue;
    const auto f = split_csv(line);
    if (f.size() != 3)
      throw Error(ErrorKind::Parse, "line " + std::to_string(n) + ": expected level,name,density");
    if (f[0] == "level")
      continue;
    const double v = parse_number(f[2], n, "density");
    if (f[0] == "species")
      t.species_map[f[1]] = v;
    else if (f[0] == "genus")
      t.genus_map[f[1]] = v;
    else if (f[0] == "family")
      t.family_map[f[1]] = v;
    else if (f[0] == "plot_mean")
      t.plot_mean = v;
    else
      throw Error(ErrorKind::Parse, "line " + std::to_string(n) + ": unknown level '" + f[0] + "'");
  }
  t.validate();
  return t;
}

std::vector<TreeRecord> read_inventory(std::istream& in)
{
  std::string line;
  int n = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++n;
    if (!blank_or_comment(line))
      header = split_csv(line);
  }
  auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int c_dbh = column("dbh_cm");
  if (c_dbh < 0)
    throw Error(ErrorKind::Parse, "inventory header must contain dbh_cm");
  const int c_species = column("species"), c_genus = column("genus"), c_family = column("family");
  const int c_soil = column("soil"), c_height = column("height_m"), c_wd = column("wood_density");
  const int c_plot = column("plot");

  std::vector<TreeRecord> out;
  while (std::getline(in, line)) {
    ++n;
    if (blank_or_comment(line))
      continue;
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw Error(ErrorKind::Parse, "line " + std::to_string(n) + ": expected " + std::to_string(header.size()) +
                                      " fields, got " + std::to_string(f.size()));
    auto get = [&](int c) { return c < 0 ? std::string() : f[static_cast<std::size_t>(c)]; };
    TreeRecord t;
    t.source = TreeSource::field;
    t.dbh = parse_number(get(c_dbh), n, "dbh_cm");
    if (!(t.dbh > 0.0))
      throw Error(ErrorKind::Parse, "line " + std::to_string(n) + ": dbh_cm must be positive");
    t.species = get(c_species);
    t.genus = get(c_genus);
    t.family = get(c_family);
    t.plot = get(c_plot);
    if (!get(c_soil).empty())
      t.soil = parse_soil(get(c_soil));
    if (!get(c_height).empty())
      t.height = parse_number(get(c_height), n, "height_m");
    if (!get(c_wd).empty())
      t.wood_density = parse_number(get(c_wd), n, "wood_density");
    out.push_back(std::move(t));
  }
  return out;
}

double field_agb(double wood_density, double dbh_cm, double height_m)
{
  if (!(wood_density > 0.0) || !(dbh_cm > 0.0) || !(height_m > 0.0))
    throw Error(ErrorKind::Domain, "field AGB needs positive wood density, DBH and height");
  return 0.0673 * std::pow(wood_density * dbh_cm * dbh_cm * height_m, 0.976);
}

double field_agb(const TreeRecord& tree, const WoodDensityTable& table, const AllometrySet& allom)
{
  const double h = tree.height > 0.0 ? tree.height : height_from_dbh(allom, tree.dbh, tree.soil);
  return field_agb(table.resolve(tree), tree.dbh, h);
}

double crown_diameter_from_area(double crown_area)
{
  if (!(crown_area > 0.0))
    throw Error(ErrorKind::Domain, "crown area must be positive");
  return 2.0 * std::sqrt(crown_area / M_PI);
}

double crown_acd(double height, double crown_area)
{
  if (!(height > 0.0))
    throw Error(ErrorKind::Domain, "crown ACD needs a positive height");
  return 0.268 * std::pow(height * crown_diameter_from_area(crown_area), 1.45);
}

std::vector<double> default_size_edges()
{
  return {10.0, 30.0, 50.0, 70.0, 90.0, 110.0, std::numeric_limits<double>::infinity()};
}

std::size_t size_class(double dbh, const std::vector<double>& edges)
{
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (dbh >= edges[i] && dbh < edges[i + 1])
      return i;
  return static_cast<std::size_t>(-1);
}

std::vector<double> SizeClassHistogram::detection_rate() const
{
  std::vector<double> out(field.size());
  for (std::size_t i = 0; i < field.size(); ++i)
    out[i] = field[i] == 0 ? std::numeric_limits<double>::quiet_NaN()
                           : 100.0 * static_cast<double>(lidar[i]) / static_cast<double>(field[i]);
  return out;
}

std::string SizeClassHistogram::label(std::size_t cls) const
{
  auto fmt = [](double v) { return std::to_string(static_cast<long>(v)); };
  if (std::isinf(edges[cls + 1]))
    return ">" + fmt(edges[cls]);
  return fmt(edges[cls]) + "-" + fmt(edges[cls + 1]);
}

SizeClassHistogram size_class_counts(const std::vector<TreeRecord>& field, const std::vector<TreeRecord>& lidar,
                                     const AllometrySet& allom, const std::vector<double>& edges)
{
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
    throw Error(ErrorKind::Parameter, "size-class edges must be ascending with at least two entries");
  SizeClassHistogram h;
  h.edges = edges;
  h.field.assign(edges.size() - 1, 0);
  h.lidar.assign(edges.size() - 1, 0);
  for (const auto& t : field)
    if (auto c = size_class(t.dbh, edges); c < h.field.size())
      ++h.field[c];
  for (const auto& t : lidar) {
    const double d = t.dbh > 0.0 ? t.dbh : dbh_from_height(allom, t.height);
    if (auto c = size_class(d, edges); c < h.lidar.size())
      ++h.lidar[c];
  }
  return h;
}

const char* to_string(BiomassMethod method)
{
  switch (method) {
  case BiomassMethod::field_eq: return "field_eq";
  case BiomassMethod::crown_eq: return "crown_eq";
  case BiomassMethod::area_general: return "area_general";
  case BiomassMethod::area_local: return "area_local";
  }
  return "unknown";
}

BiomassReport plot_acd_field(const std::vector<TreeRecord>& trees, const WoodDensityTable& table,
                             const AllometrySet& allom, double plot_area_ha, double carbon)
{
  if (!(plot_area_ha > 0.0))
    throw Error(ErrorKind::Domain, "plot area must be positive");
  BiomassReport r;
  r.method = BiomassMethod::field_eq;
  double total = 0.0;
  for (const auto& t : trees) {
    r.per_tree.push_back(field_agb(t, table, allom));
    total += r.per_tree.back();
  }
  r.plot_acd = total * carbon / 1000.0 / plot_area_ha;
  return r;
}

BiomassReport plot_acd_crowns(const std::vector<CrownMeasure>& crowns, double plot_area_ha)
{
  if (!(plot_area_ha > 0.0))
    throw Error(ErrorKind::Domain, "plot area must be positive");
  BiomassReport r;
  r.method = BiomassMethod::crown_eq;
  double total = 0.0;
  for (const auto& c : crowns) {
    r.per_tree.push_back(crown_acd(c.height, c.area));
    total += r.per_tree.back();
  }
  r.plot_acd = total / 1000.0 / plot_area_ha;
  return r;
}

double AreaBasedModel::general(double tch) const
{
  if (tch < 0.0)
    throw Error(ErrorKind::Domain, "TCH must be non-negative");
  return general_a * std::pow(tch, general_b);
}

double AreaBasedModel::local(double tch, double gf19) const
{
  if (tch < 0.0 || !(gf19 > 0.0) || gf19 > 100.0)
    throw Error(ErrorKind::Domain, "local model needs TCH >= 0 and 0 < GF19 <= 100");
  return local_a * std::pow(tch, local_b) * std::pow(gf19, local_c);
}

double AreaBasedModel::general_full(double tch, double basal_area, double wood_density) const
{
  if (tch < 0.0 || basal_area < 0.0 || wood_density < 0.0)
    throw Error(ErrorKind::Domain, "area model inputs must be non-negative");
  return full_a * std::pow(tch, full_b) * std::pow(basal_area, full_c) * std::pow(wood_density, full_d);
}

double top_canopy_height(const Raster& chm)
{
  if (chm.empty())
    throw Error(ErrorKind::EmptyInput, "empty canopy height model");
  double sum = 0.0;
  for (std::size_t r = 0; r < chm.height; ++r)
    for (std::size_t c = 0; c < chm.width; ++c)
      sum += chm.height_or_zero(r, c);
  return sum / static_cast<double>(chm.width * chm.height);
}

double gap_fraction(const Raster& chm, double threshold)
{
  if (chm.empty())
    throw Error(ErrorKind::EmptyInput, "empty canopy height model");
  std::size_t below = 0;
  for (std::size_t r = 0; r < chm.height; ++r)
    for (std::size_t c = 0; c < chm.width; ++c)
      if (chm.height_or_zero(r, c) < threshold)
        ++below;
  return 100.0 * static_cast<double>(below) / static_cast<double>(chm.width * chm.height);
}

BiasRmse bias_rmse(const std::vector<double>& estimates, const std::vector<double>& references)
{
  if (estimates.size() != references.size() || estimates.empty())
    throw Error(ErrorKind::Contract, "bias/RMSE needs equal, non-empty estimate and reference lists");
  const double n = static_cast<double>(estimates.size());
  const double mean_est = std::accumulate(estimates.begin(), estimates.end(), 0.0) / n;
  const double mean_ref = std::accumulate(references.begin(), references.end(), 0.0) / n;
  if (!(mean_ref > 0.0))
    throw Error(ErrorKind::Domain, "mean reference must be positive");
  double sq = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i)
    sq += (estimates[i] - references[i]) * (estimates[i] - references[i]);
  return {100.0 * (mean_est - mean_ref) / mean_ref, 100.0 * std::sqrt(sq / n) / mean_ref};
}

std::map<std::string, double> correction_factor(const std::vector<double>& estimates,
                                                const std::vector<double>& references,
                                                const std::vector<std::string>& groups)
{
  if (estimates.size() != references.size() || estimates.size() != groups.size())
    throw Error(ErrorKind::Contract, "correction factor inputs must have equal lengths");
  std::map<std::string, std::pair<double, double>> acc;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    auto& [num, den] = acc[groups[i]];
    num += references[i] * estimates[i];
    den += estimates[i] * estimates[i];
  }
  std::map<std::string, double> out;
  for (const auto& [g, nd] : acc) {
    if (!(nd.second > 0.0))
      throw Error(ErrorKind::Degenerate, "all estimates in group '" + g + "' are zero");
    out[g] = nd.first / nd.second;
  }
  return out;
}

} // namespace mcgc
