#include "csbm/init.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csbm/errors.hpp"
#include "csbm/rng.hpp"

namespace csbm {

namespace {

using SpMat = Eigen::SparseMatrix<double>;

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  const double scale = v.cwiseAbs().maxCoeff();
  if (scale == 0.0) return;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-10 * scale) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

double residual(const SpMat& M, const Eigen::VectorXd& v, double lambda) { return (M * v - lambda * v).norm(); }

/// Projects v onto the orthogonal complement of the columns of Q (twice, for stability).
void orthogonalize(Eigen::VectorXd& v, const Eigen::MatrixXd& Q, Eigen::Index cols) {
  if (cols == 0) return;
  for (int pass = 0; pass < 2; ++pass) v -= Q.leftCols(cols) * (Q.leftCols(cols).transpose() * v);
}

/// One Lanczos run restricted to the complement of `locked`; returns the Ritz
/// pairs whose residual estimate is below tol, smallest first.
SymmetricEigen lanczos_round(const SpMat& M, const Eigen::MatrixXd& locked, int want, double tol, Rng& rng) {
  const Eigen::Index n = M.rows();
  const Eigen::Index free_dim = n - locked.cols();
  const Eigen::Index max_steps = std::min<Eigen::Index>(free_dim, std::max<Eigen::Index>(600, 20 * want));
  Eigen::MatrixXd V(n, max_steps + 1);
  Vec alpha, beta;
  std::normal_distribution<double> gauss;

  auto fresh_start = [&](Eigen::Index cols) -> bool {
    for (int attempt = 0; attempt < 5; ++attempt) {
      Eigen::VectorXd v(n);
      for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
      orthogonalize(v, V, cols);
      orthogonalize(v, locked, locked.cols());
      const double norm = v.norm();
      if (norm > 1e-8) {
        V.col(cols) = v / norm;
        return true;
      }
    }
    return false;
  };
  if (!fresh_start(0)) return {};

  SymmetricEigen out;
  Eigen::Index m = 0;
  while (m < max_steps) {
    Eigen::VectorXd w = M * V.col(m);
    const double a = V.col(m).dot(w);
    alpha.push_back(a);
    // Locked directions last: projecting on V reintroduces whatever leak its
    // columns carry, scaled by alpha / beta, and that compounds per step.
    orthogonalize(w, V, m + 1);
    orthogonalize(w, locked, locked.cols());
    double b = w.norm();
    ++m;
    const bool breakdown = b < 1e-10;
    const bool check = breakdown || m == max_steps || m % 10 == 0;
    if (check && m >= want) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
      for (Eigen::Index k = 0; k < m; ++k) {
        T(k, k) = alpha[static_cast<std::size_t>(k)];
        if (k + 1 < m) T(k, k + 1) = T(k + 1, k) = beta[static_cast<std::size_t>(k)];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
      int converged = 0;
      for (int k = 0; k < want; ++k) {
        const double est = std::abs(b * es.eigenvectors()(m - 1, k));
        if (breakdown || est < 0.1 * tol) ++converged;
        else break;
      }
      if (converged == want || breakdown || m == max_steps) {
        const int take = std::min<int>(want, static_cast<int>(m));
        out.values = es.eigenvalues().head(take);
        out.vectors = V.leftCols(m) * es.eigenvectors().leftCols(take);
        return out;
      }
    }
    if (breakdown) {
      beta.push_back(0.0);
      if (!fresh_start(m)) break;
    } else {
      beta.push_back(b);
      V.col(m) = w / b;
    }
  }
  return out;
}

}  // namespace

SpMat normalized_laplacian(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<double> deg(n, 0.0);
  for (const Edge& e : edges) {
    deg[e.i] += 1.0;
    deg[e.j] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n + 2 * edges.size());
  for (std::size_t i = 0; i < n; ++i) triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
  for (const Edge& e : edges) {
    const double v = -1.0 / std::sqrt(deg[e.i] * deg[e.j]);
    triplets.emplace_back(static_cast<int>(e.i), static_cast<int>(e.j), v);
    triplets.emplace_back(static_cast<int>(e.j), static_cast<int>(e.i), v);
  }
  SpMat L(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  L.setFromTriplets(triplets.begin(), triplets.end());
  return L;
}

SpMat normalized_laplacian(const Dataset& ds) { return normalized_laplacian(ds.n(), ds.edges()); }

SymmetricEigen lanczos_smallest(const SpMat& M, int count, double tol) {
  const Eigen::Index n = M.rows();
  if (count < 1 || count > n) throw ValidationError("eigenpair count out of range");
  Rng rng(derive_seed(0x1a2c05, {static_cast<std::uint64_t>(n)}));
  Eigen::MatrixXd locked(n, 0);
  Vec values;
  double worst = 0.0;
  // Single-vector Lanczos sees one copy of a repeated eigenvalue per run, so
  // rounds repeat on the complement of what is already locked until a round
  // finds nothing below the current count-th value.
  for (int round = 0; round < 4 * count + 4 && locked.cols() < n; ++round) {
    SymmetricEigen r = lanczos_round(M, locked, std::min<int>(count, static_cast<int>(n - locked.cols())), tol, rng);
    if (r.values.size() == 0) break;
    const bool full = static_cast<int>(values.size()) >= count;
    if (full) {
      Vec sorted = values;
      std::sort(sorted.begin(), sorted.end());
      if (r.values[0] >= sorted[static_cast<std::size_t>(count - 1)] - tol) break;
    }
    const Eigen::Index old = locked.cols();
    locked.conservativeResize(n, old + r.values.size());
    for (Eigen::Index k = 0; k < r.values.size(); ++k) {
      Eigen::VectorXd v = r.vectors.col(k);
      orthogonalize(v, locked, old + k);
      v.normalize();
      locked.col(old + k) = v;
      values.push_back(r.values[k]);
    }
  }
  if (static_cast<int>(values.size()) < count) throw NumericError("Lanczos found too few eigenpairs");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  SymmetricEigen out;
  out.values.resize(count);
  out.vectors.resize(n, count);
  for (int k = 0; k < count; ++k) {
    const auto idx = static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)]);
    Eigen::VectorXd v = locked.col(idx);
    const double lambda = v.dot(M * v);
    out.values[k] = lambda;
    out.vectors.col(k) = v;
    worst = std::max(worst, residual(M, v, lambda));
  }
  if (worst > tol) throw NumericError("Lanczos did not converge: residual " + std::to_string(worst));
  return out;
}

SymmetricEigen smallest_eigenpairs(const SpMat& M, int count, std::size_t dense_limit, double tol) {
  const Eigen::Index n = M.rows();
  if (count < 1 || count > n) throw ValidationError("eigenpair count out of range");
  if (static_cast<std::size_t>(n) > dense_limit) return lanczos_smallest(M, count, tol);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(M)};
  if (es.info() != Eigen::Success) throw NumericError("dense eigensolver did not converge");
  return {es.eigenvalues().head(count), es.eigenvectors().leftCols(count)};
}

Embedding spectral_embedding(const Dataset& ds, int K, const EmbeddingOptions& options) {
  const std::size_t n = ds.n();
  if (K < 1 || n < 2 * static_cast<std::size_t>(K)) throw ValidationError("spectral embedding needs n >= 2K");
  const auto N = static_cast<Eigen::Index>(n);
  Embedding emb;
  emb.W = Eigen::MatrixXd::Zero(N, 2 * K);

  const SpMat L = normalized_laplacian(ds);
  const SymmetricEigen lap = smallest_eigenpairs(L, K, options.dense_limit);
  emb.laplacian_values = lap.values;
  for (int k = 0; k < K; ++k) {
    emb.max_residual = std::max(emb.max_residual, residual(L, lap.vectors.col(k), lap.values[k]));
    Eigen::VectorXd v = lap.vectors.col(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (ds.degree(i) == 0) v[static_cast<Eigen::Index>(i)] = 0.0;
    }
    const double norm = v.norm();
    if (norm > 0.0) {
      v /= norm;
    } else {
      emb.degenerate = true;
    }
    fix_sign(v);
    emb.W.col(k) = v;
  }

  // Top eigenvectors of Y Y^T, lifted from the d x d problem Y^T Y.
  const Eigen::MatrixXd& Y = ds.attributes();
  const Eigen::Index d = Y.cols();
  emb.gram_values = Eigen::VectorXd::Zero(K);
  std::vector<Eigen::VectorXd> cols;
  if (d > 0) {
    const bool small = d < N;
    const Eigen::MatrixXd G = small ? Eigen::MatrixXd(Y.transpose() * Y) : Eigen::MatrixXd(Y * Y.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    if (es.info() != Eigen::Success) throw NumericError("Gram eigensolver did not converge");
    const Eigen::Index m = G.rows();
    const double top = std::max(es.eigenvalues()[m - 1], 0.0);
    for (Eigen::Index k = 0; k < std::min<Eigen::Index>(K, m); ++k) {
      const double lambda = es.eigenvalues()[m - 1 - k];
      if (!(lambda > 1e-12 * top) || top == 0.0) break;
      Eigen::VectorXd u = small ? Eigen::VectorXd(Y * es.eigenvectors().col(m - 1 - k) / std::sqrt(lambda))
                                : Eigen::VectorXd(es.eigenvectors().col(m - 1 - k));
      u.normalize();
      emb.max_residual = std::max(emb.max_residual, (Y * (Y.transpose() * u) - lambda * u).norm());
      emb.gram_values[static_cast<Eigen::Index>(cols.size())] = lambda;
      cols.push_back(std::move(u));
    }
  }
  emb.gram_rank = static_cast<int>(cols.size());
  if (emb.gram_rank < K) emb.degenerate = true;
  // Orthonormal completion from the standard basis.
  for (Eigen::Index e = 0; static_cast<int>(cols.size()) < K && e < N; ++e) {
    Eigen::VectorXd v = Eigen::VectorXd::Unit(N, e);
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& c : cols) v -= c.dot(v) * c;
    }
    if (v.norm() > 1e-6) cols.push_back(v.normalized());
  }
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd v = cols[static_cast<std::size_t>(k)];
    fix_sign(v);
    emb.W.col(K + k) = v;
  }

  if (options.row_normalize) {
    for (Eigen::Index i = 0; i < N; ++i) {
      const double norm = emb.W.row(i).norm();
      if (norm > 0.0) emb.W.row(i) /= norm;
    }
  }
  return emb;
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int K, std::uint64_t seed, int restarts, int max_iter) {
  if (restarts < 1) throw ValidationError("kmeans: restarts must be at least 1");
  if (K < 1) throw ValidationError("kmeans: K must be positive");
  const Eigen::Index n = points.rows();
  const Eigen::Index p = points.cols();
  if (n < K) throw ValidationError("kmeans: fewer points than clusters");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  Eigen::VectorXd d2(n);
  for (int run = 0; run < restarts; ++run) {
    Rng rng = make_stream(seed, {stream::kInit, static_cast<std::uint64_t>(run)});
    Eigen::MatrixXd centers(K, p);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = points.row(pick(rng));
    for (Eigen::Index i = 0; i < n; ++i) d2[i] = (points.row(i) - centers.row(0)).squaredNorm();
    for (int c = 1; c < K; ++c) {
      const double total = d2.sum();
      Eigen::Index chosen = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        chosen = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          target -= d2[i];
          if (target < 0.0 && d2[i] > 0.0) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = pick(rng);  // fewer than K distinct points
      }
      centers.row(c) = points.row(chosen);
      for (Eigen::Index i = 0; i < n; ++i) d2[i] = std::min(d2[i], (points.row(i) - centers.row(c)).squaredNorm());
    }

    Labels labels(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      bool changed = false;
      inertia = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        int arg = 0;
        double dist = std::numeric_limits<double>::infinity();
        for (int c = 0; c < K; ++c) {
          const double dc = (points.row(i) - centers.row(c)).squaredNorm();
          if (dc < dist) {
            dist = dc;
            arg = c;
          }
        }
        d2[i] = dist;
        inertia += dist;
        if (labels[static_cast<std::size_t>(i)] != arg) {
          labels[static_cast<std::size_t>(i)] = arg;
          changed = true;
        }
      }
      if (!changed) break;
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, p);
      std::vector<Eigen::Index> counts(static_cast<std::size_t>(K), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
        ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
      }
      for (int c = 0; c < K; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) {
          centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        } else {
          // Empty cluster: move it onto the worst-fitting point.
          Eigen::Index far = 0;
          d2.maxCoeff(&far);
          centers.row(c) = points.row(far);
          d2[far] = 0.0;
        }
      }
    }
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.labels = labels;
      best.centers = centers;
    }
  }
  return best;
}

Labels random_init(std::size_t n, int K, std::uint64_t seed) {
  if (K < 1 || n < static_cast<std::size_t>(K)) throw ValidationError("random_init needs n >= K >= 1");
  Rng rng = make_stream(seed, {stream::kInit});
  Labels z(n);
  if (n == static_cast<std::size_t>(K)) {
    std::iota(z.begin(), z.end(), 0);
    std::shuffle(z.begin(), z.end(), rng);
    return z;
  }
  std::uniform_int_distribution<int> u(0, K - 1);
  std::vector<std::size_t> sizes(static_cast<std::size_t>(K));
  while (true) {
    std::fill(sizes.begin(), sizes.end(), 0);
    for (auto& zi : z) {
      zi = u(rng);
      ++sizes[static_cast<std::size_t>(zi)];
    }
    if (std::find(sizes.begin(), sizes.end(), 0) == sizes.end()) return z;
  }
}

Labels spectral_init(const Dataset& ds, int K, std::uint64_t seed, EmbeddingPart part,
                     const EmbeddingOptions& options) {
  EmbeddingOptions opts = options;
  opts.row_normalize = false;
  const Embedding emb = spectral_embedding(ds, K, opts);
  Eigen::MatrixXd points;
  const Eigen::Index n = emb.W.rows();
  const int gram = emb.gram_rank;
  switch (part) {
    case EmbeddingPart::Network:
      points = emb.W.leftCols(K);
      break;
    case EmbeddingPart::Attributes:
      points = gram > 0 ? Eigen::MatrixXd(emb.W.middleCols(K, gram)) : Eigen::MatrixXd::Zero(n, 1);
      break;
    case EmbeddingPart::Both:
      points.resize(n, K + gram);
      points << emb.W.leftCols(K), emb.W.middleCols(K, gram);
      break;
  }
  if (options.row_normalize) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double norm = points.row(i).norm();
      if (norm > 0.0) points.row(i) /= norm;
    }
  }
  return kmeans(points, K, seed, 10).labels;
}

}  // namespace csbm
