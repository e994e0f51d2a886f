#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "csbm/errors.hpp"
#include "csbm/experiment.hpp"

using namespace csbm;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_plan() {
  return nlohmann::json::parse(R"({
    "base": {"n": 60, "K": 2, "alpha_in": 6, "alpha_out": 1,
             "attr_family": {"kind": "gaussian", "params": {"dim": 2}},
             "attr_radius": 0.5, "attr_scale": "sqrt_log_n"},
    "axes": [{"key": "alpha_in", "values": [2, 8]},
             {"key": "attr_radius", "values": [0, 0.5, 1.5]}],
    "trials": 3, "seed": 11, "metric": "ari",
    "methods": ["algorithm1", "network_only"],
    "threshold_axis": "attr_radius"
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("plan parsing") {
  const ExperimentPlan plan = parse_plan(small_plan());
  CHECK(plan.num_cells() == 6);
  CHECK(plan.methods.size() == 2);
  CHECK(plan.metric == Metric::MeanARI);
  // Last axis varies fastest.
  CHECK(plan.cell_values(1) == std::vector<double>{2, 0.5});
  CHECK(plan.cell_values(3) == std::vector<double>{8, 0});
  CHECK(plan.cell_config(3)["alpha_in"].is_number_integer());

  nlohmann::json bad = small_plan();
  bad["trials"] = 0;
  CHECK_THROWS_AS(parse_plan(bad), ValidationError);
  bad = small_plan();
  bad["threshold_axis"] = "n";
  CHECK_THROWS_AS(parse_plan(bad), ValidationError);
  bad = small_plan();
  bad["methods"] = {"em"};
  CHECK_THROWS_AS(parse_plan(bad), ValidationError);
}

TEST_CASE("JSON pointer axes") {
  nlohmann::json j = small_plan();
  j["base"] = {{"n", 60}, {"K", 2}, {"alpha", {{6, 1}, {1, 6}}}};
  j["axes"] = {{{"key", "/alpha/0/0"}, {"values", {3, 9}}}};
  j.erase("threshold_axis");
  const ExperimentPlan plan = parse_plan(j);
  CHECK(plan.cell_config(1)["alpha"][0][0] == 9);
  CHECK(plan.cell_config(1)["alpha"][1][1] == 6);
}

TEST_CASE("results do not depend on the worker count") {
  const ExperimentPlan plan = parse_plan(small_plan());
  const ExperimentResult one = run_experiment(plan, 1);
  const ExperimentResult four = run_experiment(plan, 4);
  REQUIRE(one.cells.size() == four.cells.size());
  for (std::size_t c = 0; c < one.cells.size(); ++c) {
    for (std::size_t m = 0; m < 2; ++m) {
      CHECK(one.cells[c].methods[m].mean == four.cells[c].methods[m].mean);
      CHECK(one.cells[c].methods[m].std == four.cells[c].methods[m].std);
      CHECK(one.cells[c].methods[m].failures == 0);
    }
  }
  CHECK(one.curve.size() == 2);

  const fs::path dir = fs::temp_directory_path() / "csbm_test_experiment";
  fs::remove_all(dir);
  write_results_csv(one, dir / "a.csv");
  write_results_csv(four, dir / "b.csv");
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

  std::istringstream lines(slurp(dir / "a.csv"));
  std::string first, header;
  std::getline(lines, first);
  std::getline(lines, header);
  CHECK(first.rfind("# csbm version=", 0) == 0);
  CHECK(header == "alpha_in,attr_radius,method,metric,mean,std,trials,failures,scaled_divergence,verdict");

  write_curve_csv(one, dir / "curve.csv");
  std::istringstream curve(slurp(dir / "curve.csv"));
  std::getline(curve, first);
  std::getline(curve, header);
  CHECK(header == "alpha_in,attr_radius");
}

TEST_CASE("failed trials are counted, not fatal") {
  nlohmann::json j = small_plan();
  j["axes"] = {{{"key", "n"}, {"values", {60, 3}}}};
  j.erase("threshold_axis");
  const ExperimentResult r = run_experiment(parse_plan(j), 1);
  CHECK(r.cells[0].methods[0].failures == 0);
  CHECK(r.cells[1].methods[0].failures == 3);
  CHECK(!r.cells[1].methods[0].errors.empty());
}

TEST_CASE("threshold crossing") {
  // Binary two-block network: n I / log n = (sqrt(a) - 1)^2 / 2 crosses 1 at a = (1 + sqrt 2)^2.
  const nlohmann::json config{{"n", 1000000}, {"K", 2}, {"alpha_in", 4}, {"alpha_out", 1}};
  const auto a = threshold_crossing(config, "alpha_in", 1.5, 20.0, 1e-6);
  REQUIRE(a.has_value());
  CHECK(*a == doctest::Approx(std::pow(1 + std::sqrt(2.0), 2)).epsilon(1e-3));
  CHECK(!threshold_crossing(config, "alpha_in", 10.0, 20.0).has_value());
}

TEST_CASE("table layout") {
  nlohmann::json j = small_plan();
  j["axes"] = {{{"key", "alpha_in"}, {"values", {4, 8}}}};
  j.erase("threshold_axis");
  j["trials"] = 2;
  const ExperimentResult r = run_experiment(parse_plan(j), 1);
  const fs::path path = fs::temp_directory_path() / "csbm_test_experiment" / "table.csv";
  write_table_csv(r, path);
  std::istringstream lines(slurp(path));
  std::string line;
  std::getline(lines, line);
  std::getline(lines, line);
  CHECK(line == "alpha_in,4,8");
  std::getline(lines, line);
  CHECK(line.rfind("algorithm1,\"", 0) == 0);
}
