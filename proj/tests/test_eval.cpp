#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "csbm/errors.hpp"
#include "csbm/eval.hpp"
#include "csbm/rng.hpp"

using namespace csbm;

namespace {

Labels random_labels(std::size_t n, int K, Rng& rng) {
  std::uniform_int_distribution<int> u(0, K - 1);
  Labels z(n);
  for (auto& v : z) v = u(rng);
  return z;
}

std::size_t exhaustive_loss(const Labels& z, const Labels& z_hat, int K) {
  std::vector<int> perm(static_cast<std::size_t>(K));
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = z.size();
  do {
    std::size_t miss = 0;
    for (std::size_t i = 0; i < z.size(); ++i) miss += z[i] != perm[static_cast<std::size_t>(z_hat[i])];
    best = std::min(best, miss);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

TEST_CASE("loss and ari examples") {
  CHECK(loss({0, 0, 1, 1}, {0, 1, 1, 1}) == 1);
  CHECK(loss({0, 0, 1, 1}, {1, 1, 0, 0}) == 0);
  CHECK(exact_recovery({0, 0, 1, 1}, {1, 1, 0, 0}));
  CHECK(!exact_recovery({0, 0, 1, 1}, {0, 1, 1, 1}));
  CHECK(ari({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0));
  CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
  CHECK(ari({0, 0, 0}, {0, 0, 0}) == 1.0);
  CHECK_THROWS_AS(ari({0}, {0}), ValidationError);
  CHECK_THROWS_AS(loss({0, 1}, {0}), ValidationError);
  CHECK_THROWS_AS(ari({0, 1}, {0, -1}), ValidationError);
}

TEST_CASE("confusion matrix") {
  const Eigen::MatrixXi N = confusion_matrix({0, 0, 1, 2}, {1, 1, 0, 0});
  CHECK(N.rows() == 3);
  CHECK(N.cols() == 3);
  CHECK(N.sum() == 4);
  CHECK(N(0, 1) == 2);
  CHECK(N(2, 0) == 1);
}

TEST_CASE("assignment on a known matrix") {
  Eigen::MatrixXd w(3, 3);
  w << 1, 9, 1, 8, 1, 1, 1, 1, 7;
  CHECK(max_weight_assignment(w) == std::vector<int>{1, 0, 2});
}

TEST_CASE("loss properties on random labelings") {
  Rng rng(2024);
  std::uniform_int_distribution<int> kk(1, 6), nn(2, 40);
  for (int trial = 0; trial < 2000; ++trial) {
    const int K = kk(rng);
    const std::size_t n = static_cast<std::size_t>(nn(rng));
    const Labels z = random_labels(n, K, rng);
    const Labels zh = random_labels(n, K, rng);
    const std::size_t l = loss(z, zh);
    CHECK(l == exhaustive_loss(z, zh, K));
    CHECK(static_cast<double>(l) <= n * (1.0 - 1.0 / K) + 1e-12);

    std::vector<int> perm(static_cast<std::size_t>(K));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Labels zp(n);
    for (std::size_t i = 0; i < n; ++i) zp[i] = perm[static_cast<std::size_t>(zh[i])];
    CHECK(loss(z, zp) == l);
    CHECK(ari(z, zp) == doctest::Approx(ari(z, zh)).epsilon(1e-12));
    CHECK((ari(z, zh) == doctest::Approx(1.0)) == (l == 0));
    CHECK(ari(z, zh) == doctest::Approx(ari(zh, z)).epsilon(1e-12));
  }
}
