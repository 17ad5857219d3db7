#include "mcgc/cli.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <set>
#include <sstream>

using namespace mcgc;

namespace {

struct Result
{
  int code = 0;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args, const std::string& input = "")
{
  std::istringstream in(input);
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string scenes_dir()
{
  const char* env = std::getenv("MCGC_SCENES");
  return env ? env : MCGC_SCENES_DIR;
}

/// Distinct crown ids in a label CSV.
std::set<std::string> crown_ids(const std::string& labels)
{
  std::set<std::string> ids;
  std::istringstream ss(labels);
  std::string line;
  std::getline(ss, line);
  while (std::getline(ss, line)) {
    const auto id = line.substr(line.rfind(',') + 1);
    if (id != "UNASSIGNED")
      ids.insert(id);
  }
  return ids;
}

} // namespace

TEST_CASE("synth piped into segment finds both trees")
{
  const auto cloud = run({"synth", "--config", scenes_dir() + "/two_tree.toml"});
  REQUIRE(cloud.code == cli::exit_ok);
  CHECK(cloud.err.find("\"command\":\"synth\"") != std::string::npos);
  const auto seg = run({"segment", "--layers", "2", "--seed", "3"}, cloud.out);
  REQUIRE(seg.code == cli::exit_ok);
  CHECK(seg.out.rfind("index,x,y,z,agh,crown_id\n", 0) == 0);
  CHECK(crown_ids(seg.out).size() == 2);
}

TEST_CASE("every subcommand is reproducible")
{
  const test::TempDir dir;
  const auto cloud_path = dir.file("cloud.txt");
  REQUIRE(run({"synth", "--two-tree", "--seed", "2", "--out", cloud_path, "--truth", dir.file("truth.csv")}).code ==
          0);
  const auto inv = dir.write("inv.csv", "plot,dbh_cm,genus,soil\nP,50,Shorea,Alluvial\nP,31,,Kerangas\n");
  const auto wd = dir.write("wd.csv", "genus,Shorea,0.6\nplot_mean,,0.55\n");

  auto twice = [&](const std::vector<std::string>& args, const std::vector<std::string>& files) {
    std::vector<std::string> first;
    const auto a = run(args);
    REQUIRE_MESSAGE(a.code == 0, a.err);
    for (const auto& f : files)
      first.push_back(test::slurp(f));
    const auto b = run(args);
    REQUIRE(b.code == 0);
    CHECK(a.out == b.out);
    for (std::size_t i = 0; i < files.size(); ++i)
      CHECK(test::slurp(files[i]) == first[i]);
  };

  twice({"synth", "--two-tree", "--seed", "2"}, {});
  twice({"normalize", cloud_path}, {});
  twice({"prior", cloud_path}, {});
  twice({"segment", cloud_path, "--seed", "4", "--crowns", dir.file("crowns.json"), "--dump-eigen",
         dir.file("eig.csv"), "--plot", "P"},
        {dir.file("crowns.json"), dir.file("eig.csv")});
  twice({"biomass", "--crowns", dir.file("crowns.json"), "--inventory", inv, "--wood-density", wd}, {});
  twice({"report", cloud_path, "--seed", "4", "--inventory", inv, "--wood-density", wd}, {});
  CHECK(test::slurp(dir.file("truth.csv")).rfind("index,truth\n", 0) == 0);
}

TEST_CASE("biomass output")
{
  const test::TempDir dir;
  const auto inv = dir.write("inv.csv", "plot,dbh_cm,height_m\nP,50,30\n");
  const auto wd = dir.write("wd.csv", "plot_mean,,0.6\n");
  const auto r = run({"biomass", "--inventory", inv, "--wood-density", wd, "--plot-area", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("\"field_acd\": 1.1006477") != std::string::npos);
}

TEST_CASE("errors map to exit codes")
{
  const test::TempDir dir;
  const auto empty = dir.write("empty.txt", "");
  auto r = run({"prior", empty});
  CHECK(r.code == cli::exit_input);
  CHECK(!r.err.empty());
  CHECK(run({"segment", "--bogus"}).code == cli::exit_input);
  CHECK(run({"segment", dir.file("missing.txt")}).code == cli::exit_input);
  CHECK(run({"segment", "--layers", "3"}, "0 0 0 2\n").code == cli::exit_input);
  CHECK(run({"normalize"}, "1 2 abc\n").code == cli::exit_input);
  CHECK(run({}).code == cli::exit_input);
  CHECK(run({"--help"}).code == cli::exit_ok);
}

TEST_CASE("manifest can go to a file")
{
  const test::TempDir dir;
  const auto m = dir.file("manifest.json");
  const auto r = run({"--manifest", m, "synth", "--two-tree"});
  REQUIRE(r.code == 0);
  CHECK(r.err.empty());
  const auto text = test::slurp(m);
  CHECK(text.find("\"command\": \"synth\"") != std::string::npos);
  CHECK(text.find("\"duration_s\"") != std::string::npos);
}
