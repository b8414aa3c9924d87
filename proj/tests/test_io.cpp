#include "doctest.h"

#include "sinkstat/commands.hpp"
#include "sinkstat/ingest.hpp"
#include "sinkstat/serialization.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

using namespace sinkstat;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("sinkstat_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

std::size_t line_count(const fs::path& p) {
  const auto s = slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

// 4 x 6 grid over [0, 6] x [0, 4], unit cells.
const char* kPoints =
    "month,x,y,note\n"
    "1,0.5,0.5,a\n"
    "1,5.5,3.5,b\n"
    "1,3.0,2.0,\"boundary, both axes\"\n"
    "2,0.5,0.5,c\n"
    "2,1.5,0.5,d\n"
    "2,9.0,1.0,outside\n"
    "10,2.5,1.5,e\n"
    "10,2.5,2.5,f\n"
    "10,oops,1.0,bad\n"
    "3,0.5,3.5,g\n";

IngestOptions grid_options() {
  IngestOptions opt;
  opt.bbox = {0.0, 6.0, 0.0, 4.0};
  opt.rows = 4;
  opt.cols = 6;
  opt.group_column = "month";
  return opt;
}

fs::path write_points(const fs::path& dir) {
  const auto p = dir / "points.csv";
  std::ofstream(p) << kPoints;
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SINKSTAT_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

}  // namespace

TEST_CASE("doubles round-trip through text") {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}

TEST_CASE("measure json round trip") {
  const DiscreteMeasure m(Eigen::Vector3d(0.25, 0.0, 0.75));
  const auto back = discrete_measure_from_json(to_json(m));
  CHECK(back.weights() == m.weights());
  CHECK_THROWS(discrete_measure_from_json(json{{"n_points", 2}, {"weights", {0.5, 0.25, 0.25}}}));

  const EmpiricalMeasure e({1, 0, 3});
  const auto eb = empirical_measure_from_json(to_json(e));
  CHECK(eb.counts() == e.counts());
  CHECK(eb.sample_size() == 4);
}

TEST_CASE("csv writers") {
  std::ostringstream os;
  write_values_csv(os, std::vector<double>{1.5, -2.0});
  CHECK(os.str() == "1.5\n-2\n");

  std::ostringstream curve;
  write_curve_csv(curve, std::vector<double>{0.0}, std::vector<double>{0.25});
  CHECK(curve.str() == "x,density\n0,0.25\n");
  CHECK_THROWS(write_curve_csv(curve, std::vector<double>{0.0}, std::vector<double>{}));

  std::ostringstream plan;
  write_plan_csv(plan, Eigen::Matrix2d::Identity() * 0.5);
  CHECK(plan.str() == "0.5,0\n0,0.5\n");
}

TEST_CASE("csv field splitting") {
  CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_csv_line("\"x, y\",\"say \"\"hi\"\"\"\r") == std::vector<std::string>{"x, y", "say \"hi\""});
}

TEST_CASE("binning rule") {
  CHECK(bin_index(0.0, 0.0, 6.0, 6) == 0);
  CHECK(bin_index(0.5, 0.0, 6.0, 6) == 0);
  CHECK(bin_index(1.0, 0.0, 6.0, 6) == 0);
  CHECK(bin_index(1.0000001, 0.0, 6.0, 6) == 1);
  CHECK(bin_index(6.0, 0.0, 6.0, 6) == 5);
  CHECK(bin_index(3.0, 0.0, 6.0, 6) == 2);
  CHECK(bin_index(-0.1, 0.0, 6.0, 6) == -1);
  CHECK(bin_index(6.1, 0.0, 6.0, 6) == -1);
}

TEST_CASE("single record at the box centre") {
  std::istringstream in("group,x,y\nA,3.5,2.5\n");
  auto opt = grid_options();
  opt.group_column = "group";
  const auto ds = ingest_points(in, opt);
  REQUIRE(ds.labels == std::vector<std::string>{"A"});
  const auto& c = ds.groups[0].counts();
  CHECK(c[2 * 6 + 3] == 1);
  CHECK(ds.groups[0].sample_size() == 1);
}

TEST_CASE("ingestion of grouped points") {
  std::istringstream in(kPoints);
  const auto ds = ingest_points(in, grid_options());
  CHECK(ds.labels == std::vector<std::string>{"1", "2", "3", "10"});
  CHECK(ds.total_rows == 10);
  CHECK(ds.skipped == 2);
  CHECK(ds.out_of_bounds == 1);

  std::int64_t binned = 0;
  for (const auto& g : ds.groups) binned += g.sample_size();
  CHECK(binned + ds.skipped == ds.total_rows);

  const auto& jan = ds.group("1").counts();
  CHECK(jan[0] == 1);
  CHECK(jan[3 * 6 + 5] == 1);
  CHECK(jan[1 * 6 + 2] == 1);
  CHECK(ds.group("10").counts()[1 * 6 + 2] == 1);
  CHECK(ds.group("10").counts()[2 * 6 + 2] == 1);
  CHECK_THROWS_AS(ds.group("4"), std::out_of_range);

  CHECK(ds.pooled().sample_size() == 8);
  const auto space = ds.space();
  CHECK(space.size() == 24);
  CHECK(space.points()(7, 0) == 2);
  CHECK(space.points()(7, 1) == 2);

  const auto back = dataset_from_json(to_json(ds));
  CHECK(back.labels == ds.labels);
  CHECK(back.group("2").counts() == ds.group("2").counts());
  CHECK(back.skipped == ds.skipped);
}

TEST_CASE("ingestion errors") {
  auto opt = grid_options();
  std::istringstream only_outside("month,x,y\n1,0.5,0.5\n2,50,50\n");
  CHECK_THROWS_AS(ingest_points(only_outside, opt), std::invalid_argument);
  std::istringstream no_column("m,x,y\n1,0.5,0.5\n");
  CHECK_THROWS_AS(ingest_points(no_column, opt), std::invalid_argument);
  opt.bbox.xmax = opt.bbox.xmin;
  std::istringstream fine("month,x,y\n1,0.5,0.5\n");
  CHECK_THROWS_AS(ingest_points(fine, opt), std::invalid_argument);
}

TEST_CASE("simulate-clt outputs reproduce from the manifest") {
  const auto dir = scratch("clt");
  const json spec = {{"mode", "H1-two"}, {"grid", 3}, {"lambda", {1.0, 2.0}},
                     {"n", {200}},       {"reps", 40}, {"seed", 5}};
  const auto first = run_command("simulate-clt", spec, dir / "a");
  CHECK(first.manifest["tool"] == "sinkstat");
  CHECK(first.manifest["spec"]["m"] == json::array({200}));
  CHECK(fs::exists(dir / "a" / "clt_H1-two_lambda2_n200_m200_stats.csv"));
  CHECK(line_count(dir / "a" / "clt_H1-two_lambda1_n200_m200_stats.csv") == 40);

  const auto second = run_command("simulate-clt", read_json(dir / "a" / "manifest.json"), dir / "b");
  REQUIRE(first.files.size() == second.files.size());
  for (std::size_t k = 0; k < first.files.size(); ++k) {
    CHECK(first.files[k].filename() == second.files[k].filename());
    CHECK(slurp(first.files[k]) == slurp(second.files[k]));
  }
}

TEST_CASE("a single replicate still yields a manifest") {
  const auto dir = scratch("single");
  const auto res = run_command("simulate-clt", {{"grid", 3}, {"n", {50}}, {"reps", 1}}, dir);
  CHECK(line_count(dir / "clt_H0-one_lambda1_n50_stats.csv") == 1);
  CHECK_FALSE(fs::exists(dir / "clt_H0-one_lambda1_n50_stats_kde.csv"));
  CHECK(read_json(dir / "manifest.json")["command"] == "simulate-clt");
  CHECK_THROWS(run_command("simulate-clt", {{"mode", "H2"}}, dir));
  CHECK_THROWS(run_command("nope", json::object(), dir));
}

TEST_CASE("data-mode commands") {
  const auto dir = scratch("data");
  const auto csv = write_points(dir);
  run_command("ingest",
              {{"csv", csv.string()}, {"bbox", {0, 6, 0, 4}}, {"rows", 4}, {"cols", 6}, {"group_col", "month"}},
              dir / "ingest");
  const auto data = (dir / "ingest" / "dataset.json").string();
  CHECK(read_json(data)["groups"].size() == 4);

  run_command("barycenter", {{"data", data}, {"groups", {"1", "2"}}, {"uniform_support", true}}, dir / "bary");
  const auto bary = discrete_measure_from_json(read_json(dir / "bary" / "barycenter.json"));
  CHECK(bary.support().size() == 4);
  CHECK(bary[0] == doctest::Approx(0.25));

  const auto one = run_command(
      "test-one",
      {{"data", data}, {"sample", "*"}, {"reference", {{"uniform_support", true}}}, {"reps", 30}}, dir / "one");
  CHECK(fs::exists(dir / "one" / "report_lambda1.json"));
  CHECK(one.manifest["details"]["sample_size"] == 8);

  run_command("test-two", {{"data", data}, {"pairs", {"1", "2", "10"}}, {"reps", 20}, {"lambda", {1, 5}}},
              dir / "two");
  const auto matrix = slurp(dir / "two" / "pvalues_lambda5.csv");
  CHECK(matrix.rfind(",1,2,10\n1,1,", 0) == 0);
  CHECK(line_count(dir / "two" / "pvalues_lambda1.csv") == 4);
  CHECK(fs::exists(dir / "two" / "report_lambda1_2_10.json"));
}

TEST_CASE("command line") {
  const auto dir = scratch("cli");
  const auto out = (dir / "t1").string();
  CHECK(run_cli("test-one --grid 3 --n 300 -M 25 --lambda 1,2 --seed 4 --out " + out) == 0);
  CHECK(fs::exists(fs::path(out) / "report_lambda2.json"));
  const auto manifest = read_json(fs::path(out) / "manifest.json");
  CHECK(manifest["spec"]["reps"] == 25);
  CHECK(manifest["spec"]["lambda"] == json::array({1.0, 2.0}));

  const auto out2 = (dir / "t2").string();
  CHECK(run_cli("test-one --spec " + out + "/manifest.json -M 10 --out " + out2) == 0);
  const auto m2 = read_json(fs::path(out2) / "manifest.json");
  CHECK(m2["spec"]["reps"] == 10);
  CHECK(m2["spec"]["seed"] == 4);

  const auto out3 = (dir / "t3").string();
  CHECK(run_cli("test-one --spec " + out + "/manifest.json --out " + out3) == 0);
  CHECK(slurp(fs::path(out) / "replicates_lambda1.csv") == slurp(fs::path(out3) / "replicates_lambda1.csv"));

  CHECK(run_cli("power --grid 3 --n 100 -M 20 -R 2 --theta 0,0.5 --lambda 1 --out " + (dir / "p").string()) == 0);
  const auto power = slurp(dir / "p" / "power.csv");
  CHECK(power.rfind("theta,lambda,power,rejections,repeats\n", 0) == 0);
  CHECK(line_count(dir / "p" / "power.csv") == 3);

  CHECK(run_cli("simulate-clt --lambda 0 --out " + (dir / "bad").string()) != 0);
  CHECK(run_cli("test-one --no-such-flag") != 0);
  CHECK(run_cli("") != 0);
}
