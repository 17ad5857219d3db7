#include "mcgc/allometry.hpp"

#include "mcgc/config.hpp"
#include "mcgc/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mcgc {

const char* to_string(ErrorKind kind)
{
  switch (kind) {
  case ErrorKind::Parse: return "parse error";
  case ErrorKind::EmptyInput: return "empty input";
  case ErrorKind::GroundModel: return "ground model error";
  case ErrorKind::Domain: return "domain error";
  case ErrorKind::Config: return "configuration error";
  case ErrorKind::Parameter: return "parameter error";
  case ErrorKind::Contract: return "contract violation";
  case ErrorKind::Resource: return "resource error";
  case ErrorKind::Degenerate: return "degenerate input";
  }
  return "error";
}

Soil parse_soil(std::string_view name)
{
  if (name == "Alluvial" || name == "alluvial")
    return Soil::Alluvial;
  if (name == "Kerangas" || name == "kerangas")
    return Soil::Kerangas;
  if (name == "Sandstone" || name == "sandstone")
    return Soil::Sandstone;
  throw Error(ErrorKind::Config, "unknown soil type '" + std::string(name) + "'");
}

const char* to_string(Soil soil)
{
  switch (soil) {
  case Soil::Alluvial: return "Alluvial";
  case Soil::Kerangas: return "Kerangas";
  case Soil::Sandstone: return "Sandstone";
  }
  return "?";
}

double PowerLaw::evaluate(double x) const { return alpha * std::pow(x, beta); }

void AllometrySet::validate() const
{
  auto check = [](const PowerLaw& law, const std::string& name) {
    if (!(law.alpha > 0.0) || !(law.beta > 0.0))
      throw Error(ErrorKind::Config, name + ": alpha and beta must be positive");
  };
  check(cd50, "cd50");
  check(cd95, "cd95");
  check(dbh_from_h, "dbh");
  for (const auto& [soil, law] : h_from_d)
    check(law, std::string("h_from_d.") + to_string(soil));
  if (!(h_min > 0.0) || !(h_max > h_min))
    throw Error(ErrorKind::Config, "allometry range requires 0 < h_min < h_max");
}

AllometrySet parse_allometry(const std::string& text)
{
  const ConfigDocument doc = parse_config(text);
  if (!doc.arrays.empty())
    throw Error(ErrorKind::Config, "allometry files take no [[table]] arrays");
  const ConfigTable& t = doc.root;
  AllometrySet set;
  auto read_law = [&](const std::string& name, PowerLaw& law) {
    law.alpha = t.number(name + ".alpha", law.alpha);
    law.beta = t.number(name + ".beta", law.beta);
  };
  read_law("cd50", set.cd50);
  read_law("cd95", set.cd95);
  read_law("dbh", set.dbh_from_h);
  for (auto& [soil, law] : set.h_from_d)
    read_law(std::string("h_from_d.") + to_string(soil), law);
  set.h_min = t.number("h_min", set.h_min);
  set.h_max = t.number("h_max", set.h_max);

  for (const auto& [key, value] : t.values()) {
    static const char* known_prefixes[] = {"cd50.", "cd95.", "dbh.", "h_from_d."};
    const bool known = key == "h_min" || key == "h_max" ||
                       std::any_of(std::begin(known_prefixes), std::end(known_prefixes),
                                   [&](const char* p) { return key.starts_with(p); });
    if (!known)
      throw Error(ErrorKind::Config, "unknown allometry key '" + key + "'");
    if (key.starts_with("h_from_d."))
      parse_soil(key.substr(9, key.find('.', 9) - 9));
  }
  set.validate();
  return set;
}

AllometrySet load_allometry(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorKind::Parse, "cannot open allometry file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_allometry(ss.str());
}

double crown_diameter(const AllometrySet& allom, double h, CrownPercentile percentile)
{
  if (!(h > 0.0))
    throw Error(ErrorKind::Domain, "crown_diameter requires h > 0");
  return (percentile == CrownPercentile::p50 ? allom.cd50 : allom.cd95).evaluate(h);
}

double dbh_from_height(const AllometrySet& allom, double h)
{
  if (!(h > 0.0))
    throw Error(ErrorKind::Domain, "dbh_from_height requires h > 0");
  return allom.dbh_from_h.evaluate(h);
}

double height_from_dbh(const AllometrySet& allom, double d, Soil soil)
{
  if (!(d > 0.0))
    throw Error(ErrorKind::Domain, "height_from_dbh requires d > 0");
  const auto it = allom.h_from_d.find(soil);
  if (it == allom.h_from_d.end())
    throw Error(ErrorKind::Config, std::string("no height law for soil ") + to_string(soil));
  return it->second.evaluate(d);
}

RadiusTable::RadiusTable(const AllometrySet& allom)
  : cap_height_(allom.h_max)
{
  const auto steps = static_cast<std::size_t>(std::llround(cap_height_ / step));
  entries_.resize(steps + 1);
  entries_[0] = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double h = std::min(static_cast<double>(i) * step, cap_height_);
    entries_[i] = allom.cd95.evaluate(h) / 2.0;
  }
  // the last step sits exactly on the cap
  entries_[steps] = allom.cd95.evaluate(cap_height_) / 2.0;
}

double RadiusTable::max_radius(double h) const
{
  if (!(h > 0.0))
    throw Error(ErrorKind::Domain, "max_radius requires h > 0");
  const double capped = std::min(h, cap_height_);
  const auto i = static_cast<std::size_t>(std::llround(capped / step));
  return entries_[std::min(i, entries_.size() - 1)];
}

} // namespace mcgc
