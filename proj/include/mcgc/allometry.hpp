#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace mcgc {

enum class Soil { Alluvial, Kerangas, Sandstone };

Soil parse_soil(std::string_view name);
const char* to_string(Soil soil);

/// y = alpha * x^beta with alpha, beta > 0.
struct PowerLaw
{
  double alpha = 1.0;
  double beta = 1.0;
  std::string x_units;
  std::string y_units;

  double evaluate(double x) const;
};

enum class CrownPercentile { p50, p95 };

/// Regional allometric relationships. Defaults are the Indo-Malayan fits
/// (crown diameter quantiles), the height-to-DBH fit of 91 field-verified
/// crowns, and the Sepilok soil-specific DBH-to-height laws.
struct AllometrySet
{
  PowerLaw cd50{0.251, 0.830, "m", "m"};
  PowerLaw cd95{0.446, 0.854, "m", "m"};
  PowerLaw dbh_from_h{0.252, 1.465, "m", "cm"};
  std::map<Soil, PowerLaw> h_from_d{
    {Soil::Alluvial, {2.105, 0.679, "cm", "m"}},
    {Soil::Kerangas, {4.57, 0.461, "cm", "m"}},
    {Soil::Sandstone, {4.001, 0.527, "cm", "m"}},
  };
  double h_min = 1.4;  ///< validity range of the crown-size data, m
  double h_max = 70.7;

  /// Throws Config if a coefficient is non-positive or h_min >= h_max.
  void validate() const;
};

/// Reads `key = value` overrides (e.g. `cd95.alpha = 0.5`,
/// `h_from_d.Kerangas.beta = 0.46`, `h_max = 80`) on top of the defaults.
AllometrySet load_allometry(const std::string& path);
AllometrySet parse_allometry(const std::string& text);

/// Crown diameter (m) for tree height h (m). Throws Domain for h <= 0.
double crown_diameter(const AllometrySet& allom, double h, CrownPercentile percentile);

/// DBH (cm) from height (m). Throws Domain for h <= 0.
double dbh_from_height(const AllometrySet& allom, double h);

/// Height (m) from DBH (cm) for a soil type. Throws Domain for d <= 0 and
/// Config when the set has no law for the soil.
double height_from_dbh(const AllometrySet& allom, double d, Soil soil);

/// Maximum crown radius by height at 0.1 m steps, capped at the data range.
class RadiusTable
{
public:
  static constexpr double step = 0.1;

  explicit RadiusTable(const AllometrySet& allom);

  double cap_height() const { return cap_height_; }
  std::size_t size() const { return entries_.size(); }

  /// cd95(min(h, cap))/2 read at the nearest 0.1 m step. Throws Domain for h <= 0.
  double max_radius(double h) const;

private:
  std::vector<double> entries_;
  double cap_height_;
};

} // namespace mcgc
