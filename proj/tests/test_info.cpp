#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/sinh_sinh.hpp>

#include "csbm/config.hpp"
#include "csbm/errors.hpp"
#include "csbm/info.hpp"

using namespace csbm;

namespace {

nlohmann::json gaussian2() { return {{"kind", "gaussian"}, {"params", {{"dim", 2}}}}; }

CsbmSpec example2(double n, double alpha, double beta, int K, double radius) {
  nlohmann::json j{{"n", n}, {"K", K}, {"alpha_in", alpha}, {"alpha_out", beta}};
  if (radius > 0) {
    j["attr_family"] = gaussian2();
    j["attr_radius"] = radius;
    j["attr_scale"] = "sqrt_log_n";
  }
  return parse_model_config(j);
}

double bernoulli_renyi(double t, double p, double q) {
  return std::log(std::pow(p, t) * std::pow(q, 1 - t) + std::pow(1 - p, t) * std::pow(1 - q, 1 - t)) / (t - 1);
}

double zi_kl(const Family& f, double p1, double th1, double p2, double th2) {
  return (1 - p1) * std::log((1 - p1) / (1 - p2)) + p1 * std::log(p1 / p2) +
         p1 * kl_divergence(f, std::span<const double>(&th1, 1), std::span<const double>(&th2, 1));
}

}  // namespace

TEST_CASE("renyi examples") {
  const Family g = Family::gaussian();
  CHECK(renyi(0.5, g, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(renyi(0.5, g, 0.0, 2.0) == doctest::Approx(1.0));
  CHECK(renyi(0.3, Family::bernoulli(), 0.0, 0.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(renyi(1.0, g, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(renyi(0.0, g, 0.0, 1.0), DomainError);

  // Quadrature of the Gaussian example.
  boost::math::quadrature::sinh_sinh<double> integrator;
  auto density = [](double x, double m) { return std::exp(-0.5 * (x - m) * (x - m)) / std::sqrt(2 * std::numbers::pi); };
  const double integral =
      integrator.integrate([&](double x) { return std::pow(density(x, 0), 0.5) * std::pow(density(x, 2), 0.5); });
  CHECK(std::log(integral) / (0.5 - 1) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("renyi_zero_inflated reductions") {
  const Family f = Family::poisson();
  const ZeroInflatedSpec z1{0.3, f, 0.4}, z2{0.1, f, -0.2};
  CHECK(renyi_zero_inflated(0.4, z1, z1) == doctest::Approx(0.0));
  const ZeroInflatedSpec full1{1.0, f, 0.4}, full2{1.0, f, -0.2};
  CHECK(renyi_zero_inflated(0.4, full1, full2) == doctest::Approx(renyi(0.4, f, 0.4, -0.2)).epsilon(1e-12));
  const ZeroInflatedSpec same_w{0.1, f, 0.4};
  CHECK(renyi_zero_inflated(0.4, z1, same_w) == doctest::Approx(bernoulli_renyi(0.4, 0.3, 0.1)).epsilon(1e-12));
  CHECK(renyi_bernoulli(0.7, 0.3, 0.1) == doctest::Approx(bernoulli_renyi(0.7, 0.3, 0.1)).epsilon(1e-12));
  CHECK(renyi_zero_inflated(0.5, ZeroInflatedSpec{1.0, f, 0.0}, ZeroInflatedSpec{0.0, f, 0.0}) == INFINITY);
  CHECK_THROWS_AS(renyi_zero_inflated(0.5, z1, ZeroInflatedSpec{0.1, Family::gaussian(), 0.0}), ValidationError);
}

TEST_CASE("chernoff_t on an uninformative spec is zero") {
  const CsbmSpec s = example2(1000, 3, 3, 3, 0);
  for (double t : {0.1, 0.5, 0.9}) CHECK(chernoff_t(s, 0, 1, t) == doctest::Approx(0.0));
  const SupResult r = chernoff(s, 0, 2);
  CHECK(std::abs(r.value) < 1e-12);
}

TEST_CASE("chernoff_t endpoint slope is the mixture KL") {
  // The slope of CH_t at t = 0 is sum_c pi_c KL(f_ac || f_bc) + KL(h_a || h_b) / n.
  const CsbmSpec s = parse_model_config(nlohmann::json{{"n", 50},
                                                       {"K", 2},
                                                       {"pi", {0.4, 0.6}},
                                                       {"edge_prob", {{0.3, 0.1}, {0.1, 0.2}}},
                                                       {"weight_family", {{"kind", "poisson"}}},
                                                       {"weight_mean", {{4.0, 1.5}, {1.5, 2.5}}},
                                                       {"attr_family", gaussian2()},
                                                       {"attr_mean", {{1.0, 0.0}, {-0.5, 0.5}}}});
  const int a = 0, b = 1;
  double expected = 0.0;
  for (int c = 0; c < 2; ++c) {
    expected += s.pi[c] * zi_kl(Family::poisson(), s.edge_prob(a, c), s.weight_theta(a, c), s.edge_prob(b, c),
                                s.weight_theta(b, c));
  }
  expected += kl_divergence(*s.attr_family, s.attr_eta[a], s.attr_eta[b]) / 50.0;
  // CH_0 = 0, so a quadratic through the origin gives the slope from two points.
  const double h = 1e-4;
  const double slope = (4 * chernoff_t(s, a, b, h) - chernoff_t(s, a, b, 2 * h)) / (2 * h);
  CHECK(slope == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("Example 2 term by term at t = 1/2") {
  const double n = 5000, alpha = 7, beta = 2, r = 1.3;
  const CsbmSpec s = example2(n, alpha, beta, 2, r);
  const double p = alpha * std::log(n) / n, q = beta * std::log(n) / n;
  // Bernoulli terms: c = a gives D(Ber(q) || Ber(p)), c = b gives D(Ber(p) || Ber(q)).
  const double t = 0.5;
  auto bern = [&](double x, double y) {
    return -std::log(std::sqrt(x * y) + std::sqrt((1 - x) * (1 - y)));
  };
  const double delta2 = std::pow(2 * r * std::sqrt(std::log(n)), 2);
  const double expected = 0.5 * bern(q, p) + 0.5 * bern(p, q) + t * (1 - t) * delta2 / 2 / n;
  CHECK(chernoff_t(s, 0, 1, t) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("chernoff and min_divergence") {
  // Two Gaussians, no network: symmetric, so t* = 1/2.
  const CsbmSpec g = parse_model_config(nlohmann::json{{"n", 100}, {"K", 2}, {"p_in", 0}, {"p_out", 0},
                                                       {"attr_family", gaussian2()}, {"attr_radius", 1.0}});
  CHECK(chernoff(g, 0, 1).t_star == doctest::Approx(0.5).epsilon(1e-6));

  const CsbmSpec big = example2(1e6, 9, 1, 2, 0);
  const DivergenceReport rep = min_divergence(big);
  CHECK(rep.scaled == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(rep.verdict == Verdict::Possible);
  CHECK(rep.hardest_pair == std::pair<int, int>{0, 1});
  CHECK(rep.I_value == doctest::Approx(rep.CH(0, 1)));

  const DivergenceReport flat = min_divergence(example2(1e4, 4, 4, 2, 0));
  CHECK(flat.scaled == doctest::Approx(0.0));
  CHECK(flat.verdict == Verdict::Impossible);

  const DivergenceReport crit = min_divergence(example2(1e6, 1, 1, 2, std::sqrt(2.0)));
  CHECK(crit.scaled == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(crit.verdict == Verdict::Critical);
  CHECK(report_to_json(crit)["verdict"] == "Critical");
}

TEST_CASE("sup_over_t flags non-concave input") {
  const SupResult smooth = sup_over_t([](double t) { return t * (1 - t); });
  CHECK(smooth.t_star == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(!smooth.concavity_warning);
  const auto convex = [](double t) { return (t - 0.5) * (t - 0.5) + 0.3 * t; };
  const SupResult bumpy = sup_over_t(convex);
  CHECK(bumpy.concavity_warning);
  double best = -1e9;
  for (int k = 1; k < 100000; ++k) best = std::max(best, convex(k / 1e5));
  CHECK(bumpy.value >= best - 1e-9);
}

TEST_CASE("threshold_binary_gaussian examples") {
  const Vec pi{0.5, 0.5};
  Eigen::MatrixXd alpha(2, 2);
  alpha << 9, 1, 1, 9;
  CHECK(threshold_binary_gaussian(alpha, {{0.0}, {0.0}}, 1.0, pi).value == doctest::Approx(2.0));
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
  const double d = 2 * std::sqrt(2.0);
  CHECK(threshold_binary_gaussian(ones, {{0.0}, {d}}, 1.0, pi).value == doctest::Approx(1.0));
  const ThresholdResult flat = threshold_binary_gaussian(ones, {{0.0}, {0.0}}, 1.0, pi);
  CHECK(flat.value == 0.0);
  CHECK(flat.uninformative);
}

TEST_CASE("threshold_semisupervised") {
  const double a = 9, b = 1, n = 1000;
  CHECK(threshold_semisupervised(a, b, 0, 0, 2, n) == doctest::Approx(4.0 - 2.0));
  const double eta = 0.3;
  CHECK(threshold_semisupervised(a, b, 0, eta, 2, n) ==
        doctest::Approx(4.0 - 2 * std::log(1 - eta) / std::log(n) - 2));
  CHECK(threshold_semisupervised(a, b, 0, 1, 3, n) == INFINITY);
}

TEST_CASE("random specs: self-divergence, stationarity, binary limit, monotonicity") {
  Rng rng(21);
  std::uniform_real_distribution<double> u(0.5, 12.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int K = 2 + trial % 3;
    Eigen::MatrixXd alpha(K, K);
    for (int a = 0; a < K; ++a) {
      for (int b = a; b < K; ++b) alpha(a, b) = alpha(b, a) = u(rng);
    }
    const double n = 1e6;
    nlohmann::json j{{"n", n}, {"K", K}, {"alpha", nlohmann::json::array()}};
    for (int a = 0; a < K; ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (int b = 0; b < K; ++b) row.push_back(alpha(a, b));
      j["alpha"].push_back(row);
    }
    const CsbmSpec s = parse_model_config(j);
    const Vec pi(static_cast<std::size_t>(K), 1.0 / K);


    // Binary limit: n/log n CH agrees with sum_c pi_c [t a_bc + (1-t) a_ac - a_bc^t a_ac^(1-t)].
    const SupResult r = chernoff(s, 0, 1);
    const auto limit = [&](double t) {
      double v = 0;
      for (int c = 0; c < K; ++c) {
        v += pi[c] * (t * alpha(1, c) + (1 - t) * alpha(0, c) - std::pow(alpha(1, c), t) * std::pow(alpha(0, c), 1 - t));
      }
      return v;
    };
    double best = 0;
    for (int k = 1; k < 20000; ++k) best = std::max(best, limit(k / 20000.0));
    CHECK(r.value * n / std::log(n) == doctest::Approx(best).epsilon(1e-3));

    // Interior optimum is stationary.
    if (r.t_star > 1e-3 && r.t_star < 1 - 1e-3) {
      const double h = 1e-5;
      const double slope = (chernoff_t(s, 0, 1, r.t_star + h) - chernoff_t(s, 0, 1, r.t_star - h)) / (2 * h);
      CHECK(std::abs(slope * n / std::log(n)) < 1e-5);
    }
  }

  // Blocks 0 and 1 identical.
  const CsbmSpec twin = parse_model_config(nlohmann::json{{"n", 300}, {"K", 3}, {"alpha", {{3, 3, 1}, {3, 3, 1}, {1, 1, 6}}},
                                                          {"attr_family", gaussian2()},
                                                          {"attr_mean", {{1.0, 1.0}, {1.0, 1.0}, {0.0, 2.0}}}});
  CHECK(std::abs(chernoff(twin, 0, 1).value) < 1e-12);
  CHECK(chernoff(twin, 0, 2).value > 0.0);

  // Pulling Gaussian attribute means apart never lowers CH.
  double prev = -1;
  for (double radius = 0; radius <= 3; radius += 0.25) {
    const double v = chernoff(example2(2000, 4, 2, 3, radius), 0, 1).value;
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
}
