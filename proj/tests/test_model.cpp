#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "csbm/config.hpp"
#include "csbm/dataset_io.hpp"
#include "csbm/errors.hpp"
#include "csbm/model.hpp"

using namespace csbm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("csbm_test_model_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

CsbmSpec fig1a(double alpha) {
  return parse_model_config(nlohmann::json{{"n", 500},
                                           {"K", 2},
                                           {"alpha_in", alpha},
                                           {"alpha_out", 1},
                                           {"attr_family", {{"kind", "gaussian"}, {"params", {{"dim", 2}}}}},
                                           {"attr_radius", 1.0},
                                           {"attr_scale", "sqrt_log_n"}});
}

}  // namespace

TEST_CASE("sample_labels") {
  Rng a(42), b(42);
  const Vec pi{0.5, 0.5};
  const Labels z1 = sample_labels(pi, 10000, a);
  CHECK(z1 == sample_labels(pi, 10000, b));
  double ones = 0;
  for (int z : z1) ones += z;
  CHECK(std::abs(ones / 10000 - 0.5) < 0.02);
}

TEST_CASE("spec validation") {
  CsbmSpec s = fig1a(9);
  CHECK_NOTHROW(s.validate());
  s.pi = {0.7, 0.2};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = fig1a(9);
  s.edge_prob(0, 1) = 0.5;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  CHECK_THROWS_AS(parse_model_config(nlohmann::json{{"n", 10}, {"K", 1}, {"pi", {1.0}}, {"p_in", 0.1}, {"p_out", 0.1}}),
                  ValidationError);
}

TEST_CASE("generate: empty and binary") {
  CsbmSpec s = fig1a(9);
  s.edge_prob.setZero();
  CHECK(generate(s, 1).num_edges() == 0);

  const Dataset ds = generate(fig1a(9), 3);
  CHECK(ds.binary());
  for (const Edge& e : ds.edges()) {
    CHECK(e.w == 1.0);
    CHECK(e.i < e.j);
  }
  CHECK(ds.attr_dim() == 2);
  CHECK(ds.labels()->size() == 500);
}

TEST_CASE("generate: edge count matches its Poisson-binomial law") {
  const CsbmSpec s = fig1a(9);
  const Dataset ds = generate(s, 17);
  const Labels& z = *ds.labels();
  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < s.n; ++i) {
    for (std::size_t j = i + 1; j < s.n; ++j) {
      const double p = s.edge_prob(z[i], z[j]);
      mean += p;
      var += p * (1 - p);
    }
  }
  CHECK(std::abs(static_cast<double>(ds.num_edges()) - mean) < 4.0 * std::sqrt(var));
}

TEST_CASE("generate is a function of the seed") {
  const CsbmSpec s = fig1a(5);
  CHECK(generate(s, 99) == generate(s, 99));
  CHECK(!(generate(s, 99) == generate(s, 100)));
}

TEST_CASE("empirical densities and weights converge") {
  const double n = 2000;
  const double p = 20 * std::log(n) / n;
  const CsbmSpec s = parse_model_config(nlohmann::json{{"n", 2000},
                                                       {"K", 2},
                                                       {"edge_prob", {{1.5 * p, p}, {p, 2 * p}}},
                                                       {"weight_family", {{"kind", "poisson"}}},
                                                       {"weight_mean", {{3.0, 6.0}, {6.0, 2.0}}}});
  std::vector<double> errs;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset ds = generate(s, seed, {ZeroMode::Truncated});
    const Labels& z = *ds.labels();
    Eigen::MatrixXd count = Eigen::MatrixXd::Zero(2, 2), wsum = Eigen::MatrixXd::Zero(2, 2),
                    wsq = Eigen::MatrixXd::Zero(2, 2);
    for (const Edge& e : ds.edges()) {
      const int a = std::min(z[e.i], z[e.j]), b = std::max(z[e.i], z[e.j]);
      count(a, b) += 1;
      wsum(a, b) += e.w;
      wsq(a, b) += e.w * e.w;
    }
    const double n0 = std::count(z.begin(), z.end(), 0), n1 = 2000 - n0;
    const double pairs[2][2] = {{n0 * (n0 - 1) / 2, n0 * n1}, {0, n1 * (n1 - 1) / 2}};
    double worst = 0;
    for (int a = 0; a < 2; ++a) {
      for (int b = a; b < 2; ++b) {
        worst = std::max(worst, std::abs(count(a, b) / pairs[a][b] - s.edge_prob(a, b)) / s.edge_prob(a, b));
        // Truncated Poisson mean lambda / (1 - e^-lambda).
        const double lambda = grad_psi(Family::poisson(), s.weight_theta(a, b));
        const double mean = lambda / (1 - std::exp(-lambda));
        const double m = wsum(a, b) / count(a, b);
        const double se = std::sqrt((wsq(a, b) / count(a, b) - m * m) / count(a, b));
        CHECK(std::abs(m - mean) < 5 * se);
      }
    }
    errs.push_back(worst);
  }
  std::sort(errs.begin(), errs.end());
  CHECK(errs[2] < 0.1);
}

TEST_CASE("dataset validation") {
  CHECK_THROWS_AS(Dataset(3, {{1, 1, 1.0}}, Eigen::MatrixXd()), ValidationError);
  CHECK_THROWS_AS(Dataset(3, {{0, 5, 1.0}}, Eigen::MatrixXd()), ValidationError);
  CHECK_THROWS_AS(Dataset(3, {{0, 1, 1.0}, {0, 1, 1.0}}, Eigen::MatrixXd()), ValidationError);
  CHECK_THROWS_AS(Dataset(3, {{0, 1, 0.0}}, Eigen::MatrixXd()), ValidationError);
  CHECK_THROWS_AS(Dataset(3, {}, Eigen::MatrixXd::Zero(2, 1)), ValidationError);
  const Dataset ds(4, {{2, 3, 2.5}, {0, 1, 1.0}}, Eigen::MatrixXd());
  CHECK(ds.weight(3, 2) == 2.5);
  CHECK(ds.weight(0, 2) == 0.0);
  CHECK(ds.degree(0) == 1);
}

TEST_CASE("save/load round trip") {
  const CsbmSpec s = parse_model_config(nlohmann::json{{"n", 200},
                                                       {"K", 3},
                                                       {"p_in", 0.2},
                                                       {"p_out", 0.05},
                                                       {"weight_family", {{"kind", "gaussian"}}},
                                                       {"weight_mean_in", 2.0},
                                                       {"weight_mean_out", -1.0},
                                                       {"attr_family", {{"kind", "gaussian"}, {"params", {{"dim", 3}}}}},
                                                       {"attr_radius", 2.0}});
  const Dataset ds = generate(s, 8);
  const fs::path dir = scratch("roundtrip");
  save_dataset(ds, dir);
  CHECK(load_dataset(dir) == ds);

  const Dataset bin = generate(fig1a(3), 8);
  save_dataset(bin, dir);
  const Dataset back = load_dataset(dir);
  CHECK(back == bin);
  CHECK(back.binary());
}

TEST_CASE("loader errors") {
  const fs::path dir = scratch("errors");
  write(dir / "loop.txt", "# csbm-edges v1 n=4\n0 1 1\n3 3 1.0\n");
  CHECK_THROWS_AS(load_dataset(dir / "loop.txt", ""), ValidationError);

  write(dir / "bad.txt", "# csbm-edges v1 n=4\n0 1 1\n2 x 1\n");
  try {
    load_dataset(dir / "bad.txt", "");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  write(dir / "asym.txt", "# csbm-edges v1 n=4\n0 1 1\n1 0 2\n");
  CHECK_THROWS_AS(load_dataset(dir / "asym.txt", ""), ValidationError);

  write(dir / "ok.txt", "# csbm-edges v1 n=3\n0 1 1\n");
  write(dir / "attr.csv", "y0\n1\n2\n");
  CHECK_THROWS_AS(load_dataset(dir / "ok.txt", dir / "attr.csv"), ValidationError);
}

TEST_CASE("config forms") {
  const CsbmSpec a = parse_model_config(nlohmann::json{{"n", 100}, {"alpha", {{4, 1}, {1, 4}}}});
  CHECK(a.K == 2);
  CHECK(a.edge_prob(0, 0) == doctest::Approx(4 * std::log(100.0) / 100));
  CHECK(a.pi[0] == 0.5);
  CHECK_THROWS_AS(parse_model_config(nlohmann::json{{"n", 100}, {"K", 2}, {"p_in", 0.1}, {"p_out", 0.1}, {"alpha_in", 1}, {"alpha_out", 1}}),
                  ValidationError);
  try {
    parse_model_config(nlohmann::json{{"n", 100}, {"K", 2}, {"p_in", 0.1}, {"p_out", 0.1},
                                      {"weight_family", {{"kind", "cauchy"}}}, {"weight_mean_in", 1}, {"weight_mean_out", 1}});
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("weight_family") != std::string::npos);
  }
  CHECK(config_hash(nlohmann::json{{"n", 1}}) == config_hash(nlohmann::json{{"n", 1}}));
  CHECK(config_hash(nlohmann::json{{"n", 1}}) != config_hash(nlohmann::json{{"n", 2}}));
}
