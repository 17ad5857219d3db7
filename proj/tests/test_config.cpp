#include "mcgc/config.hpp"
#include "mcgc/error.hpp"

#include <doctest.h>

using namespace mcgc;

TEST_CASE("root keys, sections and arrays of tables")
{
  const auto doc = parse_config(R"(# comment
seed = 7
name = "plot a" # trailing comment
flag = true

[random]
trees = 20

[[tree]]
x = 1.5
shape = "cone"

[[tree]]
x = -2e1
)");
  CHECK(doc.root.number("seed") == 7.0);
  CHECK(doc.root.text("name", "") == "plot a");
  CHECK(doc.root.boolean("flag", false));
  CHECK(doc.root.number("random.trees") == 20.0);
  REQUIRE(doc.arrays.at("tree").size() == 2);
  CHECK(doc.arrays.at("tree")[0].number("x") == 1.5);
  CHECK(doc.arrays.at("tree")[0].text("shape", "") == "cone");
  CHECK(doc.arrays.at("tree")[1].number("x") == -20.0);
  CHECK(doc.root.number("missing", 3.0) == 3.0);
}

TEST_CASE("malformed documents are rejected")
{
  CHECK_THROWS_AS(parse_config("novalue\n"), Error);
  CHECK_THROWS_AS(parse_config("a = 1\na = 2\n"), Error);
  CHECK_THROWS_AS(parse_config("[unclosed\n"), Error);
  CHECK_THROWS_AS(parse_config("s = \"open\n"), Error);
  const auto doc = parse_config("n = abc\n");
  CHECK_THROWS_AS(doc.root.number("n"), Error);
  CHECK_THROWS_AS(doc.root.number("absent"), Error);
}
