#include <doctest.h>

#include <cmath>
#include <random>

#include "csbm/errors.hpp"
#include "csbm/expfam.hpp"

using namespace csbm;

namespace {

std::vector<Family> all_families() {
  return {Family::bernoulli(), Family::poisson(), Family::gaussian(1.0, 1), Family::gaussian(2.5, 3),
          Family::exponential(), Family::gamma(2.5)};
}

Vec random_theta(const Family& f, Rng& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0), neg(-3.0, -0.2);
  Vec t(static_cast<std::size_t>(f.dim()));
  for (auto& v : t) v = (f.kind() == FamilyKind::Exponential || f.kind() == FamilyKind::Gamma) ? neg(rng) : u(rng);
  return t;
}

}  // namespace

TEST_CASE("psi closed forms") {
  CHECK(psi(Family::poisson(), 0.0) == doctest::Approx(1.0));
  CHECK(psi(Family::bernoulli(), 0.0) == doctest::Approx(std::log(2.0)));
  CHECK(psi(Family::gaussian(), 2.0) == doctest::Approx(2.0));
  CHECK(psi(Family::exponential(), -2.0) == doctest::Approx(-std::log(2.0)));
  CHECK(psi(Family::gamma(3.0), -2.0) == doctest::Approx(-3.0 * std::log(2.0)));
  CHECK_THROWS_AS(psi(Family::exponential(), 0.5), DomainError);
}

TEST_CASE("psi_star closed forms") {
  CHECK(psi_star(Family::poisson(), 1.0) == doctest::Approx(-1.0));
  CHECK(psi_star(Family::gaussian(), 2.0) == doctest::Approx(2.0));
  CHECK(psi_star(Family::poisson(), 3.0) == doctest::Approx(0.29583686600).epsilon(1e-9));
  CHECK(psi_star(Family::bernoulli(), 0.0) == 0.0);
  CHECK(psi_star(Family::bernoulli(), 1.0) == 0.0);
  CHECK(psi_star(Family::poisson(), 0.0) == 0.0);
  CHECK_THROWS_AS(psi_star(Family::poisson(), -1.0), DomainError);
}

TEST_CASE("psi_star matches a grid maximization of <theta, x> - psi") {
  const Family f = Family::poisson();
  double best = -1e300;
  for (int k = -40000; k <= 40000; ++k) {
    const double theta = k * 1e-4;
    best = std::max(best, theta * 3.0 - psi(f, theta));
  }
  CHECK(psi_star(f, 3.0) == doctest::Approx(best).epsilon(1e-7));
}

TEST_CASE("mean maps") {
  CHECK(grad_psi(Family::poisson(), 0.0) == doctest::Approx(1.0));
  CHECK(mean_to_natural(Family::exponential(), 2.0) == doctest::Approx(-0.5));
  CHECK(grad_psi(Family::gamma(2.0), -4.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(mean_to_natural(Family::bernoulli(), 1.0), DomainError);
  CHECK_THROWS_AS(mean_to_natural(Family::bernoulli(), 0.0), DomainError);

  Rng rng(3);
  for (const Family& f : all_families()) {
    for (int k = 0; k < 100; ++k) {
      const Vec theta = random_theta(f, rng);
      const Vec back = mean_to_natural(f, grad_psi(f, theta));
      for (std::size_t i = 0; i < theta.size(); ++i) CHECK(back[i] == doctest::Approx(theta[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("bregman closed forms") {
  CHECK(bregman(Family::poisson(), 3.0, 3.0) == 0.0);
  CHECK(bregman(Family::poisson(), 0.0, 2.0) == doctest::Approx(2.0));
  const Vec x{1.0, 0.0}, mu{0.0, 0.0};
  CHECK(bregman(Family::gaussian(1.0, 2), x, mu) == doctest::Approx(0.5));
  CHECK(bregman(Family::exponential(), 2.0, 1.0) == doctest::Approx(2.0 - std::log(2.0) - 1.0));
  CHECK(bregman(Family::gamma(3.0), 2.0, 1.0) == doctest::Approx(3.0 * (2.0 - std::log(2.0) - 1.0)));
  CHECK(bregman(Family::bernoulli(), 1.0, 0.25) == doctest::Approx(-std::log(0.25)));
  CHECK_THROWS_AS(bregman(Family::poisson(), 1.0, 0.0), DomainError);
}

TEST_CASE("bregman is nonnegative and zero only on the diagonal") {
  Rng rng(5);
  for (const Family& f : all_families()) {
    for (int k = 0; k < 200; ++k) {
      const Vec mu = grad_psi(f, random_theta(f, rng));
      const Vec x = grad_psi(f, random_theta(f, rng));
      CHECK(bregman(f, x, mu) >= 0.0);
      CHECK(bregman(f, mu, mu) < 1e-12);
    }
  }
}

TEST_CASE("log_density examples") {
  CHECK(log_density(Family::poisson(), 0.0, 0.0) == doctest::Approx(-1.0));
  CHECK(-bregman(Family::poisson(), 0.0, 1.0) + psi_star(Family::poisson(), 0.0) == doctest::Approx(-1.0));
  CHECK(log_density(Family::bernoulli(), 0.0, 1.0) == doctest::Approx(-std::log(2.0)));
  CHECK(log_density(Family::gaussian(), 0.0, 0.0) == 0.0);
}

TEST_CASE("psi is convex") {
  Rng rng(9);
  const double h = 1e-3;
  for (const Family& f : all_families()) {
    if (f.dim() != 1) continue;
    for (int k = 0; k < 100; ++k) {
      const double t = random_theta(f, rng)[0];
      const double second = psi(f, t + h) - 2.0 * psi(f, t) + psi(f, t - h);
      CHECK(second > 0.0);
    }
  }
}

TEST_CASE("samplers match grad_psi") {
  Rng rng(11);
  for (const Family& f : {Family::bernoulli(), Family::poisson(), Family::gaussian(2.0), Family::exponential(),
                          Family::gamma(2.5)}) {
    const double theta = f.kind() == FamilyKind::Exponential || f.kind() == FamilyKind::Gamma ? -1.5 : 0.7;
    const double mean = grad_psi(f, theta);
    double sum = 0.0, sq = 0.0;
    const int draws = 100000;
    for (int k = 0; k < draws; ++k) {
      const double x = sample(f, theta, rng);
      sum += x;
      sq += x * x;
    }
    const double m = sum / draws;
    const double se = std::sqrt((sq / draws - m * m) / draws);
    CHECK(std::abs(m - mean) < 5.0 * se);
  }
  double sum = 0.0;
  for (int k = 0; k < 10000; ++k) sum += sample(Family::poisson(), std::log(4.0), rng);
  CHECK(std::abs(sum / 10000 - 4.0) < 0.1);
}

TEST_CASE("zero-inflated sampling") {
  Rng rng(13);
  ZeroInflatedSpec off{0.0, Family::gaussian(), 5.0};
  for (int k = 0; k < 1000; ++k) CHECK(sample_zero_inflated(off, rng) == 0.0);

  ZeroInflatedSpec on{1.0, Family::gaussian(), 5.0};
  double sum = 0.0;
  for (int k = 0; k < 10000; ++k) sum += sample_zero_inflated(on, rng);
  CHECK(std::abs(sum / 10000 - 5.0) < 0.05);

  // Truncated mode never emits 0 from a present edge.
  ZeroInflatedSpec pois{1.0, Family::poisson(), std::log(0.5)};
  for (int k = 0; k < 2000; ++k) CHECK(sample_zero_inflated(pois, rng, ZeroMode::Truncated) >= 1.0);
  int zeros = 0;
  for (int k = 0; k < 2000; ++k) zeros += sample_zero_inflated(pois, rng, ZeroMode::AsAbsent) == 0.0;
  CHECK(zeros > 0);

  ZeroInflatedSpec bad{1.5, Family::gaussian(), 0.0};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("zero mass") {
  CHECK(zero_mass(Family::poisson(), 2.0) == doctest::Approx(std::exp(-2.0)));
  CHECK(zero_mass(Family::bernoulli(), 0.25) == doctest::Approx(0.75));
  CHECK(zero_mass(Family::gaussian(), 0.0) == 0.0);
}

TEST_CASE("family JSON") {
  for (const Family& f : all_families()) {
    nlohmann::json j = f;
    CHECK(parse_family(j, "family") == f);
  }
  const nlohmann::json j = nlohmann::json::parse(R"({"kind": "gaussian", "params": {"variance": 2, "dim": 3}})");
  const Family g = parse_family(j, "attr_family");
  CHECK(g.variance() == 2.0);
  CHECK(g.dim() == 3);
  CHECK(parse_family_name("gamma:shape=2").shape() == 2.0);
  try {
    parse_family(nlohmann::json::parse(R"({"kind": "weibull"})"), "weight_family");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("weight_family") != std::string::npos);
  }
}
