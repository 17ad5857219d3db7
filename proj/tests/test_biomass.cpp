#include "mcgc/biomass.hpp"
#include "mcgc/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace mcgc;

namespace {

TreeRecord tree(double dbh, double height = 0.0, double wd = 0.0)
{
  TreeRecord t;
  t.dbh = dbh;
  t.height = height;
  t.wood_density = wd;
  return t;
}

Raster raster(const std::vector<double>& v)
{
  Raster r;
  r.width = v.size();
  r.height = 1;
  r.values = v;
  return r;
}

} // namespace

// Reference values below come from 30-digit evaluations of the closed forms.

TEST_CASE("field AGB")
{
  CHECK(field_agb(0.6, 50.0, 30.0) == doctest::Approx(2341.80364514642).epsilon(1e-12));
  CHECK(field_agb(1.0, 1.0, 1.0) == doctest::Approx(0.0673).epsilon(1e-14));
  CHECK(test::throws_kind(ErrorKind::Domain, [] { field_agb(0.0, 50, 30); }));
  CHECK(test::throws_kind(ErrorKind::Domain, [] { field_agb(0.6, -1, 30); }));
  CHECK(test::throws_kind(ErrorKind::Domain, [] { field_agb(0.6, 50, 0); }));
  // monotone in every argument
  CHECK(field_agb(0.7, 50, 30) > field_agb(0.6, 50, 30));
  CHECK(field_agb(0.6, 51, 30) > field_agb(0.6, 50, 30));
  CHECK(field_agb(0.6, 50, 31) > field_agb(0.6, 50, 30));
}

TEST_CASE("field AGB from a record fills height and density")
{
  const AllometrySet a;
  WoodDensityTable wd;
  wd.genus_map["Shorea"] = 0.6;
  wd.family_map["Dipterocarpaceae"] = 0.5;
  TreeRecord t = tree(50.0);
  t.genus = "Shorea";
  t.family = "Dipterocarpaceae";
  t.species = "Shorea johorensis";
  CHECK(wd.resolve(t) == 0.6);
  CHECK(field_agb(t, wd, a) == doctest::Approx(2340.39089882692).epsilon(1e-12));
  t.height = 30.0;
  CHECK(field_agb(t, wd, a) == doctest::Approx(2341.80364514642).epsilon(1e-12));
  t.wood_density = 0.7;
  CHECK(wd.resolve(t) == 0.7);
}

TEST_CASE("wood density fallback order")
{
  WoodDensityTable wd;
  wd.species_map["A a"] = 0.8;
  wd.species_map["B b"] = 0.4;
  wd.genus_map["A"] = 0.7;
  wd.family_map["F"] = 0.5;
  TreeRecord t;
  t.species = "A a";
  t.genus = "A";
  t.family = "F";
  CHECK(wd.resolve(t) == 0.8);
  t.species = "A z";
  CHECK(wd.resolve(t) == 0.7);
  t.genus = "Z";
  CHECK(wd.resolve(t) == 0.5);
  t.family = "G";
  CHECK(wd.resolve(t) == doctest::Approx(0.6)); // mean of the species entries
  wd.plot_mean = 0.55;
  CHECK(wd.resolve(t) == 0.55);
  CHECK(test::throws_kind(ErrorKind::Config, [&] { WoodDensityTable{}.resolve(t); }));
  wd.genus_map["Bad"] = -1.0;
  CHECK(test::throws_kind(ErrorKind::Config, [&] { wd.validate(); }));
}

TEST_CASE("crown carbon")
{
  CHECK(crown_diameter_from_area(16.0 * M_PI) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(crown_acd(30.0, 16.0 * M_PI) == doctest::Approx(757.601968628232).epsilon(1e-12));
  CHECK(crown_acd(1.0, M_PI / 4.0) == doctest::Approx(0.268).epsilon(1e-13));
  CHECK(crown_acd(30.0, 32.0 * M_PI) == doctest::Approx(1252.24077601412).epsilon(1e-12));
  CHECK(crown_acd(30.0, 32.0 * M_PI) / crown_acd(30.0, 16.0 * M_PI) ==
        doctest::Approx(std::pow(2.0, 1.45 / 2.0)).epsilon(1e-12));
  CHECK(test::throws_kind(ErrorKind::Domain, [] { crown_acd(0.0, 10.0); }));
  CHECK(test::throws_kind(ErrorKind::Domain, [] { crown_acd(10.0, 0.0); }));
  CHECK(test::throws_kind(ErrorKind::Domain, [] { crown_diameter_from_area(-1.0); }));
}

TEST_CASE("size classes")
{
  const AllometrySet a;
  const auto edges = default_size_edges();
  CHECK(size_class(95.0, edges) == 4);
  CHECK(size_class(5.0, edges) == static_cast<std::size_t>(-1));
  CHECK(size_class(500.0, edges) == 5);
  CHECK(size_class(30.0, edges) == 1);

  TreeRecord lidar;
  lidar.source = TreeSource::lidar;
  lidar.height = 30.0;
  const auto h = size_class_counts({tree(95.0), tree(36.0)}, {lidar}, a);
  CHECK(h.field == std::vector<std::size_t>{0, 1, 0, 0, 1, 0});
  CHECK(h.lidar == std::vector<std::size_t>{0, 1, 0, 0, 0, 0});
  const auto rate = h.detection_rate();
  CHECK(std::isnan(rate[0]));
  CHECK(rate[1] == 100.0);
  CHECK(rate[4] == 0.0);
  CHECK(h.label(0) == "10-30");
  CHECK(h.label(5) == ">110");

  const std::vector<TreeRecord> same{tree(15), tree(45), tree(120)};
  const auto eq = size_class_counts(same, same, a);
  for (std::size_t c = 0; c < eq.field.size(); ++c)
    if (eq.field[c] > 0)
      CHECK(eq.detection_rate()[c] == 100.0);
}

TEST_CASE("plot-level carbon")
{
  const AllometrySet a;
  WoodDensityTable wd;
  wd.plot_mean = 0.6;
  const auto one = plot_acd_field({tree(50, 30)}, wd, a, 1.0);
  CHECK(one.plot_acd == doctest::Approx(1.10064771321882).epsilon(1e-12));
  CHECK(one.per_tree.size() == 1);
  CHECK(plot_acd_field({}, wd, a, 1.0).plot_acd == 0.0);
  CHECK(plot_acd_field({tree(50, 30)}, wd, a, 0.5).plot_acd == doctest::Approx(2 * one.plot_acd));

  SUBCASE("additive over disjoint subsets")
  {
    const std::vector<TreeRecord> x{tree(20, 15), tree(33, 22), tree(71, 40)};
    const std::vector<TreeRecord> y{tree(12, 9), tree(88, 45)};
    auto all = x;
    all.insert(all.end(), y.begin(), y.end());
    const double lhs = plot_acd_field(all, wd, a, 1.0).plot_acd;
    const double rhs = plot_acd_field(x, wd, a, 1.0).plot_acd + plot_acd_field(y, wd, a, 1.0).plot_acd;
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-14));
  }

  const auto crowns = plot_acd_crowns({{30.0, 16.0 * M_PI}}, 1.0);
  CHECK(crowns.plot_acd == doctest::Approx(0.757601968628232).epsilon(1e-12));
  CHECK(plot_acd_crowns({}, 1.0).plot_acd == 0.0);
}

TEST_CASE("area-based models")
{
  const AreaBasedModel m;
  CHECK(m.general(40.0) == doctest::Approx(182.498660136971).epsilon(1e-12));
  CHECK(m.local(40.0, 20.0) == doctest::Approx(69.5004255675138).epsilon(1e-12));
  CHECK(m.general_full(40.0, 30.0, 0.6) == doctest::Approx(146.068118840577).epsilon(1e-12));

  CHECK(top_canopy_height(raster({10, 20, Raster::empty_value, 30})) == doctest::Approx(15.0));
  CHECK(gap_fraction(raster({30, 30, 30})) == 0.0);
  CHECK(gap_fraction(raster({Raster::empty_value, Raster::empty_value})) == 100.0);
  CHECK(gap_fraction(raster({10, 25, 10, 25})) == 50.0);
  CHECK(gap_fraction(raster({19.0, 18.99})) == 50.0);
}

TEST_CASE("bias and RMSE")
{
  const std::vector<double> ref{100, 200, 300};
  auto r = bias_rmse(ref, ref);
  CHECK(r.bias_pct == 0.0);
  CHECK(r.rmse_pct == 0.0);
  r = bias_rmse({50, 100, 150}, ref);
  CHECK(r.bias_pct == -50.0);
  r = bias_rmse({110, 190, 310, 190}, {100, 200, 300, 200});
  CHECK(r.bias_pct == doctest::Approx(0.0));
  CHECK(r.rmse_pct == doctest::Approx(100.0 * 10.0 / 200.0));
  r = bias_rmse({120, 200}, {100, 200});
  CHECK(r.bias_pct > 0.0);
  CHECK(r.rmse_pct >= 0.0);
  CHECK(test::throws_kind(ErrorKind::Contract, [] { bias_rmse({1, 2}, {1}); }));
  CHECK(test::throws_kind(ErrorKind::Contract, [] { bias_rmse({}, {}); }));
  CHECK(test::throws_kind(ErrorKind::Domain, [] { bias_rmse({1}, {0}); }));
}

TEST_CASE("correction factors")
{
  const auto f = correction_factor({1, 2, 3, 4, 5}, {2, 5, 3, 4, 10}, {"a", "a", "b", "b", "c"});
  CHECK(f.at("a") == doctest::Approx(2.4).epsilon(1e-12));
  CHECK(f.at("b") == doctest::Approx(1.0));
  CHECK(f.at("c") == doctest::Approx(2.0));
  // the residual of the fitted line is orthogonal to the estimates
  const std::vector<double> est{1.3, 2.9, 0.4, 7.7}, ref{2.0, 3.1, 1.0, 9.9};
  const double k = correction_factor(est, ref, {"g", "g", "g", "g"}).at("g");
  double resid = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i)
    resid += est[i] * (ref[i] - k * est[i]);
  CHECK(std::abs(resid) <= 1e-9);
  CHECK(test::throws_kind(ErrorKind::Degenerate, [] { correction_factor({0, 0}, {1, 2}, {"a", "a"}); }));
}

TEST_CASE("readers")
{
  std::istringstream wd_csv("level,name,density\nspecies,Shorea johorensis,0.52\ngenus,Shorea,0.5\n"
                            "family,Dipterocarpaceae,0.55\nplot_mean,,0.58\n");
  const auto wd = read_wood_density(wd_csv);
  CHECK(wd.species_map.at("Shorea johorensis") == 0.52);
  CHECK(wd.genus_map.at("Shorea") == 0.5);
  CHECK(wd.family_map.at("Dipterocarpaceae") == 0.55);
  CHECK(wd.plot_mean == 0.58);
  std::istringstream bad_level("order,X,0.5\n");
  CHECK(test::throws_kind(ErrorKind::Parse, [&] { read_wood_density(bad_level); }));

  std::istringstream inv("plot,dbh_cm,genus,soil,height_m\nP1,50,Shorea,Kerangas,\nP1,12.5,,,9.5\n");
  const auto trees = read_inventory(inv);
  REQUIRE(trees.size() == 2);
  CHECK(trees[0].dbh == 50.0);
  CHECK(trees[0].genus == "Shorea");
  CHECK(trees[0].soil == Soil::Kerangas);
  CHECK(trees[0].height == 0.0);
  CHECK(trees[1].height == 9.5);
  CHECK(trees[1].soil == Soil::Alluvial);
  CHECK(trees[1].plot == "P1");
  std::istringstream no_dbh("species\nX\n");
  CHECK(test::throws_kind(ErrorKind::Parse, [&] { read_inventory(no_dbh); }));
  std::istringstream short_row("dbh_cm,species\n10\n");
  CHECK(test::throws_kind(ErrorKind::Parse, [&] { read_inventory(short_row); }));
  std::istringstream neg("dbh_cm\n-3\n");
  CHECK(test::throws_kind(ErrorKind::Parse, [&] { read_inventory(neg); }));
}
