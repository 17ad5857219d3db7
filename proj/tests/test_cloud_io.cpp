#include "mcgc/allometry.hpp"
#include "mcgc/cloud_io.hpp"
#include "mcgc/error.hpp"
#include "mcgc/synth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace mcgc;

namespace {

PointCloud parse(const std::string& text, CloudFormat f = CloudFormat::auto_detect)
{
  std::istringstream in(text);
  return read_cloud(in, f);
}

ErrorKind kind_of(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Contract;
}

} // namespace

TEST_CASE("noise rows are dropped and order is kept")
{
  const auto c = parse("0 0 10 0\n1 1 12 7\n");
  REQUIRE(c.size() == 1);
  CHECK(c[0].x == 0.0);
  CHECK(c[0].z == 10.0);
  CHECK(!c.has_agh);
}

TEST_CASE("three columns default to class 0; commas and comments accepted")
{
  const auto c = parse("# header\n1,2,3\n4 5 6\n\n  # indented comment\n7\t8\t9\n");
  REQUIRE(c.size() == 3);
  for (const auto& p : c.points)
    CHECK(p.class_code == 0);
  CHECK(c[2].y == 8.0);
}

TEST_CASE("five columns carry an above-ground height")
{
  const auto c = parse("1 2 103 0 3\n1 2 100 2 0\n");
  CHECK(c.has_agh);
  CHECK(c[0].agh == 3.0);
}

TEST_CASE("malformed input reports the line")
{
  try {
    parse("1 2 3\n1 2 x\n");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(kind_of([] { parse("1 2 3\n1 2 3 4\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse("1 2\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse("1 2 3 2.5\n"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse("1 2 3\n", CloudFormat::xyzc_text); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse(""); }) == ErrorKind::EmptyInput);
  CHECK(kind_of([] { parse("# only a comment\n"); }) == ErrorKind::EmptyInput);
  CHECK(kind_of([] { load_cloud("/nonexistent/cloud.xyz"); }) == ErrorKind::Parse);
}

TEST_CASE("a generated scene round-trips through a file")
{
  SceneSpec spec;
  spec.max_x = 40.0;
  spec.max_y = 50.0;
  spec.ground_density = 5.0;
  spec.seed = 3;
  const auto scene = generate_scene(spec, AllometrySet{});
  REQUIRE(scene.cloud.size() == 10000);
  test::TempDir dir;
  save_cloud(dir.file("scene.xyz"), scene.cloud);
  const auto back = load_cloud(dir.file("scene.xyz"));
  REQUIRE(back.size() == 10000);
  for (std::size_t i = 0; i < back.size(); i += 997) {
    CHECK(back[i].x == scene.cloud[i].x);
    CHECK(back[i].y == scene.cloud[i].y);
    CHECK(back[i].agh == scene.cloud[i].agh);
  }
}

TEST_CASE("normalization against flat and tilted ground")
{
  SUBCASE("flat ground")
  {
    PointCloud c;
    for (int x = 0; x <= 10; ++x)
      for (int y = 0; y <= 10; ++y)
        test::add_point(c, x, y, 100.0, class_code::ground);
    test::add_point(c, 5.3, 4.1, 130.0);
    c.has_agh = false;
    const auto n = normalize_heights(c);
    CHECK(n.has_agh);
    CHECK(n.points.back().agh == doctest::Approx(30.0));
    for (std::size_t i = 0; i + 1 < n.size(); ++i)
      CHECK(n[i].agh == doctest::Approx(0.0));
  }
  SUBCASE("tilted plane")
  {
    PointCloud c;
    Rng rng(5);
    for (int i = 0; i < 20000; ++i) {
      const double x = rng.uniform(0.0, 100.0), y = rng.uniform(0.0, 20.0);
      test::add_point(c, x, y, 100.0 + 0.1 * x, class_code::ground);
    }
    test::add_point(c, 50.0, 10.0, 120.0);
    const auto n = normalize_heights(c);
    CHECK(n.points.back().agh == doctest::Approx(15.0).epsilon(0.5 / 15.0));
    for (std::size_t i = 0; i + 1 < n.size(); i += 101)
      CHECK(n[i].agh <= 0.1 + 1e-12);
  }
  SUBCASE("agh is never negative")
  {
    PointCloud c;
    for (int x = 0; x < 5; ++x)
      test::add_point(c, x, 0.0, 10.0, class_code::ground);
    test::add_point(c, 2.0, 0.0, 9.0);
    const auto n = normalize_heights(c);
    CHECK(n.points.back().agh == 0.0);
  }
  SUBCASE("holes are filled from the nearest ground cell")
  {
    PointCloud c;
    for (int x = 0; x < 3; ++x)
      for (int y = 0; y < 3; ++y)
        test::add_point(c, x + 0.5, y + 0.5, 50.0, class_code::ground);
    test::add_point(c, 20.5, 0.5, 80.0);
    const auto n = normalize_heights(c);
    CHECK(n.points.back().agh == doctest::Approx(30.0));
  }
}

TEST_CASE("ground model errors and the flat fallback")
{
  PointCloud c;
  test::add_point(c, 0, 0, 12.0);
  test::add_point(c, 1, 1, 15.0);
  c.has_agh = false;
  CHECK(kind_of([&] { normalize_heights(c); }) == ErrorKind::GroundModel);
  GroundOptions fallback;
  fallback.flat_fallback = true;
  const auto n = normalize_heights(c, fallback);
  CHECK(n[0].agh == 0.0);
  CHECK(n[1].agh == 3.0);
  GroundOptions bad;
  bad.ground_cell = 0.0;
  CHECK(kind_of([&] { normalize_heights(c, bad); }) == ErrorKind::Parameter);
}

TEST_CASE("normalizing on a zero ground model is idempotent")
{
  SceneSpec spec;
  spec.trees.push_back({});
  spec.trees[0].x = 15.0;
  spec.trees[0].y = 15.0;
  spec.seed = 9;
  const auto scene = generate_scene(spec, AllometrySet{});
  PointCloud flat = scene.cloud;
  for (auto& p : flat.points)
    p.z = p.class_code == class_code::ground ? 0.0 : p.agh;
  const auto again = normalize_heights(flat);
  REQUIRE(again.size() == flat.size());
  for (std::size_t i = 0; i < again.size(); ++i)
    CHECK(std::abs(again[i].agh - flat[i].agh) <= 1e-9);
}

TEST_CASE("canopy height model")
{
  SUBCASE("single point")
  {
    const auto c = test::flat_cloud({{10.25, 20.25, 25.0}});
    const auto r = rasterize_chm(c);
    REQUIRE(r.width == 1);
    REQUIRE(r.height == 1);
    CHECK(r.at(0, 0) == 25.0);
  }
  SUBCASE("max rule and empty cells")
  {
    const auto c = test::flat_cloud({{0.1, 0.1, 10.0}, {0.2, 0.3, 12.0}, {2.2, 0.1, 5.0}});
    const auto r = rasterize_chm(c);
    CHECK(r.width == 5);
    CHECK(r.at(0, 0) == 12.0);
    CHECK(r.is_empty_cell(0, 1));
    CHECK(r.height_or_zero(0, 1) == 0.0);
    CHECK(r.at(0, 4) == 5.0);
  }
  SUBCASE("two-tree scene peaks at the tallest tree")
  {
    const AllometrySet a;
    const auto scene = generate_scene(two_tree_scene(4), a);
    const auto r = rasterize_chm(scene.cloud);
    double top = 0.0;
    for (std::size_t row = 0; row < r.height; ++row)
      for (std::size_t col = 0; col < r.width; ++col) {
        CHECK(r.height_or_zero(row, col) <= scene.cloud.max_agh());
        top = std::max(top, r.height_or_zero(row, col));
      }
    CHECK(top == doctest::Approx(30.0).epsilon(0.01 / 30.0));
  }
  CHECK(kind_of([] { rasterize_chm(PointCloud{}); }) == ErrorKind::EmptyInput);
}
