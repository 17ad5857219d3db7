#include "mcgc/error.hpp"
#include "mcgc/graph_weights.hpp"
#include "mcgc/synth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace mcgc;

namespace {

GraphContext manual_context(double k_h, double k_z)
{
  GraphContext ctx;
  ctx.k_h = k_h;
  ctx.k_z = k_z;
  return ctx;
}

} // namespace

TEST_CASE("centroid of an isolated point is the point itself")
{
  const auto c = test::flat_cloud({{0, 0, 20}, {100, 100, 20}});
  const auto cv = compute_centroids(c, AllometrySet{});
  CHECK(cv[0].dx == 0.0);
  CHECK(cv[0].dy == 0.0);
  CHECK(cv[0].dz == 0.0);
  CHECK(cv[0].neighbor_count == 0);
}

TEST_CASE("edge point of a uniform blob points towards the blob centre")
{
  const AllometrySet a;
  Rng rng(17);
  PointCloud c;
  c.has_agh = true;
  // radius of the neighbourhood at 20 m is cd95(20)/4 ~ 1.4 m
  test::add_ball(c, rng, 0.0, 0.0, 20.0, 2.5, 6000);
  test::add_point(c, -2.4, 0.0, 20.0);
  const auto cv = compute_centroids(c, a);
  const auto& e = cv.back();
  REQUIRE(e.neighbor_count > 10);
  const double angle = std::atan2(std::abs(e.dy), e.dx);
  CHECK(angle * 180.0 / M_PI <= 15.0);
}

TEST_CASE("centroid lies below the apex of a cone")
{
  const AllometrySet a;
  SceneSpec spec;
  SynthTree t;
  t.x = 15.0;
  t.y = 15.0;
  t.height = 25.0;
  t.shape = CrownShape::cone;
  spec.trees = {t};
  spec.stem_density = 0.0;
  spec.seed = 8;
  const auto scene = generate_scene(spec, a);
  std::size_t apex = 0;
  for (std::size_t i = 0; i < scene.cloud.size(); ++i)
    if (scene.cloud[i].agh > scene.cloud[apex].agh)
      apex = i;
  const auto cv = compute_centroids(scene.cloud, a);
  CHECK(cv[apex].dz < 0.0);
}

TEST_CASE("base weight closed forms")
{
  const WeightParams p;
  Point a, b;
  CHECK(base_weight(a, b, p) == 1.0);
  b.x = 4.0;
  b.z = 2.0;
  CHECK(std::abs(base_weight(a, b, p) - 0.135335283236613) <= 1e-12);
  b.x = 40.0;
  b.z = 0.0;
  CHECK(base_weight(a, b, p) < 1e-43);
}

TEST_CASE("centroid adjustments")
{
  auto ctx = manual_context(5.0, 15.0);
  const double base = 0.5;

  SUBCASE("parallel offsets leave the weight unchanged")
  {
    const CentroidVector ci{1.0, 0.5, 0.0, 5}, cj{2.0, 1.0, 0.0, 5};
    PairGeometry g;
    g.d_h = 2.0;
    CHECK(adjusted_weight(base, ci, cj, 20.0, 19.0, g, ctx) == base);
  }
  SUBCASE("opposed horizontal offsets at d_h = K_H")
  {
    const CentroidVector ci{1.0, 0.0, 0.0, 5}, cj{-1.0, 0.0, 0.0, 5};
    PairGeometry g;
    g.d_h = ctx.k_h;
    g.theta_h = M_PI;
    const double w = adjusted_weight(base, ci, cj, 20.0, 20.0, g, ctx);
    CHECK(std::abs(w / base - 0.670320046035639) <= 1e-12);
  }
  SUBCASE("diverging vertical offsets at d_z = K_Z")
  {
    const CentroidVector taller{0.0, 0.0, 1.0, 5}, lower{0.0, 0.0, -1.0, 5};
    PairGeometry g;
    g.d_z = ctx.k_z;
    const double w = adjusted_weight(base, taller, lower, 25.0, 10.0, g, ctx);
    CHECK(std::abs(w / base - 0.670320046035639) <= 1e-12);
    // converging offsets (taller point's centroid below it) are left alone
    CHECK(adjusted_weight(base, lower, taller, 25.0, 10.0, g, ctx) == base);
    // equal heights never trigger the vertical term
    CHECK(adjusted_weight(base, taller, lower, 10.0, 10.0, g, ctx) == base);
  }
  SUBCASE("a zero horizontal offset disables the horizontal term")
  {
    const CentroidVector ci{0.0, 0.0, 0.0, 0}, cj{-1.0, 0.0, 0.0, 5};
    PairGeometry g;
    g.d_h = 1.0;
    CHECK(adjusted_weight(base, ci, cj, 20.0, 20.0, g, ctx) == base);
  }
  SUBCASE("perpendicular offsets are not penalised")
  {
    const CentroidVector ci{1.0, 0.0, 0.0, 5}, cj{0.0, 1.0, 0.0, 5};
    PairGeometry g;
    g.d_h = 1.0;
    CHECK(adjusted_weight(base, ci, cj, 20.0, 20.0, g, ctx) == base);
  }
  SUBCASE("zero strengths reduce to the base weight")
  {
    ctx.params.w_h = 0.0;
    ctx.params.w_z = 0.0;
    const CentroidVector ci{1.0, 0.0, 1.0, 5}, cj{-1.0, 0.0, -1.0, 5};
    PairGeometry g;
    g.d_h = 0.5;
    g.d_z = 0.5;
    CHECK(adjusted_weight(base, ci, cj, 20.0, 10.0, g, ctx) == base);
  }
}

TEST_CASE("random pairs: bounds, symmetry, monotone adjustments and scale invariance")
{
  Rng rng(23);
  auto ctx = manual_context(4.0, 20.0);
  bool bounded = true, below_base = true, symmetric = true, scale_ok = true;
  for (int n = 0; n < 100000; ++n) {
    Point a, b;
    a.x = rng.uniform(0, 30);
    a.y = rng.uniform(0, 30);
    a.z = a.agh = rng.uniform(0, 40);
    b.x = rng.uniform(0, 30);
    b.y = rng.uniform(0, 30);
    b.z = b.agh = rng.uniform(0, 40);
    const CentroidVector ca{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), 3};
    const CentroidVector cb{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), 3};
    const double base = base_weight(a, b, ctx.params);
    const auto g = PairGeometry::between(a, b, ca, cb);
    const double w = adjusted_weight(base, ca, cb, a.agh, b.agh, g, ctx);
    const double w_rev = adjusted_weight(base_weight(b, a, ctx.params), cb, ca, b.agh, a.agh,
                                         PairGeometry::between(b, a, cb, ca), ctx);
    bounded = bounded && w >= 0.0 && w <= 1.0;
    below_base = below_base && w <= base;
    symmetric = symmetric && w == w_rev;

    const double s = rng.uniform(0.1, 10.0);
    Point as = a, bs = b;
    as.x *= s;
    as.y *= s;
    as.z *= s;
    bs.x *= s;
    bs.y *= s;
    bs.z *= s;
    WeightParams ps;
    ps.sigma_xy *= s;
    ps.sigma_z *= s;
    scale_ok = scale_ok && std::abs(base_weight(as, bs, ps) - base) <= 1e-12;
  }
  CHECK(bounded);
  CHECK(below_base);
  CHECK(symmetric);
  CHECK(scale_ok);
}

TEST_CASE("weight matrix")
{
  const AllometrySet a;
  Rng rng(29);
  PointCloud c;
  c.has_agh = true;
  for (int i = 0; i < 100; ++i)
    test::add_point(c, rng.uniform(0, 15), rng.uniform(0, 15), rng.uniform(2, 25));
  const auto ctx = make_graph_context(c, a, WeightParams{});
  CHECK(ctx.k_h == doctest::Approx(a.cd95.evaluate(c.max_agh()) / 2.0));
  CHECK(ctx.k_z == doctest::Approx(c.max_agh() / 2.0));

  std::vector<std::size_t> all(c.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto w = weight_matrix(c, ctx, all);
  REQUIRE(w.rows() == 100);
  REQUIRE(w.cols() == 100);
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.minCoeff() >= 0.0);
  CHECK(w.maxCoeff() <= 1.0);
  for (int i = 0; i < 100; i += 7)
    for (int j = 0; j < 100; j += 3)
      CHECK(w(i, j) == doctest::Approx(pair_weight(c, ctx, i, j)).epsilon(1e-12));

  const std::vector<std::size_t> rows{3, 50};
  const auto part = weight_matrix(c, ctx, rows);
  CHECK(part.row(0) == w.row(3));
  CHECK(part.row(1) == w.row(50));

  CHECK_THROWS_AS(weight_matrix(c, ctx, std::vector<std::size_t>{}), Error);
  try {
    weight_matrix(c, ctx, all, 1000);
    FAIL("expected a resource error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Resource);
  }
}

TEST_CASE("parameters must be positive")
{
  WeightParams p;
  p.sigma_z = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = WeightParams{};
  p.w_h = -0.1;
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK_THROWS_AS(make_graph_context(test::flat_cloud({{0, 0, 0}}), AllometrySet{}, WeightParams{}), Error);
}

TEST_CASE("boundary points link more strongly within their crown")
{
  const AllometrySet a;
  const auto scene = generate_scene(two_tree_scene(3), a);
  PointCloud veg;
  veg.has_agh = true;
  std::vector<int> truth;
  for (std::size_t i = 0; i < scene.cloud.size(); ++i)
    if (scene.truth[i] >= 0) {
      veg.points.push_back(scene.cloud[i]);
      truth.push_back(scene.truth[i]);
    }
  const auto ctx = make_graph_context(veg, a, WeightParams{});
  // band between the two stems at x = 10 and x = 16
  double within = 0.0, across = 0.0;
  std::size_t n_within = 0, n_across = 0;
  for (std::size_t i = 0; i < veg.size(); ++i) {
    if (veg[i].x < 11.5 || veg[i].x > 14.5)
      continue;
    for (std::size_t j = 0; j < veg.size(); ++j) {
      if (i == j || std::abs(veg[j].x - veg[i].x) > 3.0)
        continue;
      const double w = pair_weight(veg, ctx, i, j);
      if (truth[i] == truth[j]) {
        within += w;
        ++n_within;
      } else {
        across += w;
        ++n_across;
      }
    }
  }
  REQUIRE(n_within > 0);
  REQUIRE(n_across > 0);
  CHECK(within / n_within > across / n_across);
}
