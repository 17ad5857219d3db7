#pragma once

#include "mcgc/allometry.hpp"
#include "mcgc/point_cloud.hpp"

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace mcgc {

enum class TreeSource { field, lidar };

struct TreeRecord
{
  TreeSource source = TreeSource::field;
  double dbh = 0.0;            ///< cm
  double height = 0.0;         ///< m, 0 when not measured
  double crown_diameter = 0.0; ///< m, lidar trees only
  double wood_density = 0.0;   ///< g/cm^3, 0 to resolve through the table
  Soil soil = Soil::Alluvial;
  std::string species;
  std::string genus;
  std::string family;
  std::string plot;
};

/// Wood density lookup: species, then genus, then family, then plot mean.
struct WoodDensityTable
{
  std::map<std::string, double> species_map;
  std::map<std::string, double> genus_map;
  std::map<std::string, double> family_map;
  double plot_mean = 0.0; ///< 0 means the mean of the species entries

  /// Throws Config if any density is non-positive.
  void validate() const;
  /// Throws Config when nothing in the table applies.
  double resolve(const TreeRecord& tree) const;
};

/// Reads `level,name,density` rows (level = species, genus, family or
/// plot_mean). A header row is optional.
WoodDensityTable read_wood_density(std::istream& in);

/// Field inventory CSV with a header naming the columns: dbh_cm (required),
/// species, genus, family, soil, height_m, wood_density, plot.
std::vector<TreeRecord> read_inventory(std::istream& in);

inline constexpr double carbon_fraction = 0.47;

/// 0.0673 (WD D^2 H)^0.976 in kg. Throws Domain for non-positive inputs.
double field_agb(double wood_density, double dbh_cm, double height_m);

/// Field AGB with the height filled from the soil's height-diameter law
/// when absent and the density resolved through the table.
double field_agb(const TreeRecord& tree, const WoodDensityTable& table, const AllometrySet& allom);

/// CD = 2 sqrt(CA / pi). Throws Domain for area <= 0.
double crown_diameter_from_area(double crown_area);

/// 0.268 (H CD)^1.45, taken as kg C per tree. Throws Domain for
/// non-positive inputs.
double crown_acd(double height, double crown_area);

std::vector<double> default_size_edges();

struct SizeClassHistogram
{
  std::vector<double> edges;      ///< class i covers [edges[i], edges[i+1])
  std::vector<std::size_t> field; ///< per class
  std::vector<std::size_t> lidar;

  /// 100 lidar / field per class; NaN where the field count is 0.
  std::vector<double> detection_rate() const;
  std::string label(std::size_t cls) const;
};

/// Class index of a DBH, or npos below the first edge.
std::size_t size_class(double dbh, const std::vector<double>& edges);

/// Lidar trees without a DBH get one from their height.
SizeClassHistogram size_class_counts(const std::vector<TreeRecord>& field, const std::vector<TreeRecord>& lidar,
                                     const AllometrySet& allom, const std::vector<double>& edges = default_size_edges());

enum class BiomassMethod { field_eq, crown_eq, area_general, area_local };
const char* to_string(BiomassMethod method);

struct BiomassReport
{
  BiomassMethod method = BiomassMethod::field_eq;
  std::vector<double> per_tree; ///< kg AGB (field) or kg C (crown)
  double plot_acd = 0.0;        ///< Mg C / ha
};

/// Sum of AGB * carbon_fraction / 1000 over the plot area (ha).
BiomassReport plot_acd_field(const std::vector<TreeRecord>& trees, const WoodDensityTable& table,
                             const AllometrySet& allom, double plot_area_ha, double carbon = carbon_fraction);

struct CrownMeasure
{
  double height = 0.0; ///< m
  double area = 0.0;   ///< m^2
};

/// Sum of crown_acd / 1000 over the plot area (ha).
BiomassReport plot_acd_crowns(const std::vector<CrownMeasure>& crowns, double plot_area_ha);

/// Area-based canopy models, ACD in Mg C / ha.
struct AreaBasedModel
{
  double general_a = 7.37;
  double general_b = 0.870;
  double local_a = 25.93;
  double local_b = 0.437;
  double local_c = -0.209;
  /// Full general form a TCH^b BA^c WD^d.
  double full_a = 3.836;
  double full_b = 0.281;
  double full_c = 0.972;
  double full_d = 1.376;

  double general(double tch) const;
  double local(double tch, double gf19) const;
  double general_full(double tch, double basal_area, double wood_density) const;
};

/// Mean CHM cell value, empty cells read as 0 m.
double top_canopy_height(const Raster& chm);

/// Percentage of CHM cells below `threshold`, empty cells read as 0 m.
double gap_fraction(const Raster& chm, double threshold = 19.0);

struct BiasRmse
{
  double bias_pct = 0.0;
  double rmse_pct = 0.0;
};

/// Bias and RMSE as percentages of the mean reference. Throws Contract on
/// length mismatch or empty input, Domain when the mean reference is not positive.
BiasRmse bias_rmse(const std::vector<double>& estimates, const std::vector<double>& references);

/// Per-group origin-constrained least-squares factor sum(ref est) / sum(est^2).
/// Throws Degenerate when a group's estimates are all zero.
std::map<std::string, double> correction_factor(const std::vector<double>& estimates,
                                                const std::vector<double>& references,
                                                const std::vector<std::string>& groups);

} // namespace mcgc
