#include "csbm/eval.hpp"

#include <algorithm>
#include <limits>

#include "csbm/errors.hpp"

namespace csbm {

namespace {

void check_pair(const Labels& z, const Labels& z_hat) {
  if (z.size() != z_hat.size()) throw ValidationError("label vectors differ in length");
  for (const Labels* l : {&z, &z_hat}) {
    for (int v : *l) {
      if (v < 0) throw ValidationError("labels must be nonnegative");
    }
  }
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

Eigen::MatrixXi confusion_matrix(const Labels& z, const Labels& z_hat) {
  check_pair(z, z_hat);
  int K = 0;
  for (int v : z) K = std::max(K, v + 1);
  for (int v : z_hat) K = std::max(K, v + 1);
  Eigen::MatrixXi N = Eigen::MatrixXi::Zero(K, K);
  for (std::size_t i = 0; i < z.size(); ++i) ++N(z[i], z_hat[i]);
  return N;
}

// Shortest augmenting path form of the Hungarian method, on costs = -weights.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const int K = static_cast<int>(weights.rows());
  if (weights.cols() != K) throw ValidationError("assignment needs a square matrix");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(K + 1, 0.0), v(K + 1, 0.0), dist(K + 1);
  std::vector<int> match(K + 1, 0), way(K + 1, 0);  // match[col] = row, 1-based
  std::vector<char> used(K + 1);
  for (int row = 1; row <= K; ++row) {
    match[0] = row;
    int col0 = 0;
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const int r = match[col0];
      double delta = inf;
      int col1 = 0;
      for (int c = 1; c <= K; ++c) {
        if (used[c]) continue;
        const double cur = -weights(r - 1, c - 1) - u[r] - v[c];
        if (cur < dist[c]) {
          dist[c] = cur;
          way[c] = col0;
        }
        if (dist[c] < delta) {
          delta = dist[c];
          col1 = c;
        }
      }
      for (int c = 0; c <= K; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          dist[c] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const int col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> assignment(K);
  for (int c = 1; c <= K; ++c) assignment[match[c] - 1] = c - 1;
  return assignment;
}

std::size_t loss(const Labels& z, const Labels& z_hat) {
  const Eigen::MatrixXi N = confusion_matrix(z, z_hat);
  if (N.size() == 0) return 0;
  const std::vector<int> tau = max_weight_assignment(N.cast<double>());
  std::size_t agree = 0;
  for (int a = 0; a < N.rows(); ++a) agree += static_cast<std::size_t>(N(a, tau[a]));
  return z.size() - agree;
}

double ari(const Labels& z, const Labels& z_hat) {
  check_pair(z, z_hat);
  const double n = static_cast<double>(z.size());
  if (z.size() < 2) throw ValidationError("ARI needs at least two nodes");
  const Eigen::MatrixXi N = confusion_matrix(z, z_hat);
  double index = 0.0, rows = 0.0, cols = 0.0;
  for (int a = 0; a < N.rows(); ++a) {
    for (int b = 0; b < N.cols(); ++b) index += choose2(N(a, b));
    rows += choose2(N.row(a).sum());
  }
  for (int b = 0; b < N.cols(); ++b) cols += choose2(N.col(b).sum());
  const double expected = rows * cols / choose2(n);
  const double max_index = 0.5 * (rows + cols);
  // Both partitions trivial (all singletons or one block each): identical.
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

bool exact_recovery(const Labels& z, const Labels& z_hat) { return loss(z, z_hat) == 0; }

}  // namespace csbm
