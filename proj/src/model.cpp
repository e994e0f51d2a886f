#include "csbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csbm/errors.hpp"

namespace csbm {

ZeroInflatedSpec CsbmSpec::edge_law(int a, int b) const {
  ZeroInflatedSpec z;
  z.p = edge_prob(a, b);
  if (weight_family) {
    z.weight_family = *weight_family;
    z.theta = weight_theta(a, b);
  }
  return z;
}

void CsbmSpec::validate() const {
  if (K < 2) throw ValidationError("K must be at least 2");
  if (n < 1) throw ValidationError("n must be positive");
  const auto k = static_cast<std::size_t>(K);
  if (pi.size() != k) throw ValidationError("pi must have K entries");
  double total = 0.0;
  for (double p : pi) {
    if (!(p > 0.0)) throw ValidationError("every pi entry must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("pi must sum to 1");
  if (edge_prob.rows() != K || edge_prob.cols() != K) throw ValidationError("edge_prob must be K x K");
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      const double p = edge_prob(a, b);
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("edge_prob entries must lie in [0, 1]");
      if (p != edge_prob(b, a)) throw ValidationError("edge_prob must be symmetric");
    }
  }
  if (weight_family) {
    if (weight_family->dim() != 1) throw ValidationError("weight_family must be one-dimensional");
    if (weight_theta.rows() != K || weight_theta.cols() != K) throw ValidationError("weight_theta must be K x K");
    for (int a = 0; a < K; ++a) {
      for (int b = 0; b < K; ++b) {
        const double t = weight_theta(a, b);
        if (t != weight_theta(b, a)) throw ValidationError("weight_theta must be symmetric");
        if (!weight_family->in_natural_domain(std::span<const double>(&t, 1))) {
          throw ValidationError("weight_theta(" + std::to_string(a) + "," + std::to_string(b) +
                                ") outside the natural domain of " + weight_family->name());
        }
      }
    }
  }
  if (attr_family) {
    if (attr_eta.size() != k) throw ValidationError("attr_eta must have K entries");
    for (int a = 0; a < K; ++a) {
      if (!attr_family->in_natural_domain(attr_eta[a])) {
        throw ValidationError("attr_eta[" + std::to_string(a) + "] outside the natural domain of " +
                              attr_family->name());
      }
    }
  }
}

Dataset::Dataset(std::size_t n, std::vector<Edge> edges, Eigen::MatrixXd attributes, std::optional<Labels> labels,
                 bool binary)
    : n_(n), binary_(binary), edges_(std::move(edges)), attributes_(std::move(attributes)), labels_(std::move(labels)) {
  if (attributes_.rows() != static_cast<Eigen::Index>(n_)) {
    if (attributes_.size() == 0) {
      attributes_.resize(static_cast<Eigen::Index>(n_), 0);
    } else {
      throw ValidationError("attribute rows (" + std::to_string(attributes_.rows()) + ") != n (" +
                            std::to_string(n_) + ")");
    }
  }
  if (labels_ && labels_->size() != n_) throw ValidationError("label count != n");
  if (labels_) {
    for (int z : *labels_) {
      if (z < 0) throw ValidationError("labels must be nonnegative");
    }
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    if (ed.i == ed.j) throw ValidationError("self-loop on node " + std::to_string(ed.i));
    if (ed.i > ed.j) throw ValidationError("edge (" + std::to_string(ed.i) + "," + std::to_string(ed.j) + ") not upper-triangular");
    if (ed.j >= n_) throw ValidationError("edge endpoint " + std::to_string(ed.j) + " out of range");
    if (ed.w == 0.0 || !std::isfinite(ed.w)) {
      throw ValidationError("edge (" + std::to_string(ed.i) + "," + std::to_string(ed.j) + ") has zero or non-finite weight");
    }
    if (binary_ && ed.w != 1.0) throw ValidationError("binary network with non-unit weight");
    if (e > 0 && edges_[e - 1].i == ed.i && edges_[e - 1].j == ed.j) {
      throw ValidationError("duplicate edge (" + std::to_string(ed.i) + "," + std::to_string(ed.j) + ")");
    }
  }

  std::vector<std::size_t> deg(n_, 0);
  for (const Edge& ed : edges_) {
    ++deg[ed.i];
    ++deg[ed.j];
  }
  offsets_.assign(n_ + 1, 0);
  for (std::size_t i = 0; i < n_; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  adj_.resize(offsets_[n_]);
  adj_w_.resize(offsets_[n_]);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& ed : edges_) {
    adj_[cursor[ed.i]] = ed.j;
    adj_w_[cursor[ed.i]++] = ed.w;
    adj_[cursor[ed.j]] = ed.i;
    adj_w_[cursor[ed.j]++] = ed.w;
  }
  // Sorting edges by (i, j) leaves each row sorted except for the lower part;
  // sort rows so neighbor lookups can bisect.
  for (std::size_t i = 0; i < n_; ++i) {
    std::vector<std::size_t> idx(deg[i]);
    std::iota(idx.begin(), idx.end(), offsets_[i]);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return adj_[a] < adj_[b]; });
    std::vector<std::uint32_t> nb(deg[i]);
    std::vector<double> w(deg[i]);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      nb[k] = adj_[idx[k]];
      w[k] = adj_w_[idx[k]];
    }
    std::copy(nb.begin(), nb.end(), adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]));
    std::copy(w.begin(), w.end(), adj_w_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]));
  }
}

double Dataset::weight(std::size_t i, std::size_t j) const {
  const auto nb = neighbors(i);
  const auto it = std::lower_bound(nb.begin(), nb.end(), static_cast<std::uint32_t>(j));
  if (it == nb.end() || *it != j) return 0.0;
  return neighbor_weights(i)[static_cast<std::size_t>(it - nb.begin())];
}

Labels sample_labels(std::span<const double> pi, std::size_t n, Rng& rng) {
  if (pi.size() < 2) throw ValidationError("K must be at least 2");
  for (double p : pi) {
    if (!(p > 0.0)) throw ValidationError("every pi entry must be positive");
  }
  std::discrete_distribution<int> dist(pi.begin(), pi.end());
  Labels z(n);
  for (auto& zi : z) zi = dist(rng);
  return z;
}

Dataset generate(const CsbmSpec& spec, std::uint64_t seed, const GenerateOptions& options) {
  spec.validate();
  Rng rng = make_stream(seed, {stream::kLabels});
  return generate_with_labels(spec, sample_labels(spec.pi, spec.n, rng), seed, options);
}

Dataset generate_with_labels(const CsbmSpec& spec, const Labels& labels, std::uint64_t seed,
                             const GenerateOptions& options) {
  spec.validate();
  const std::size_t n = spec.n;
  if (labels.size() != n) throw ValidationError("label count != n");
  const int K = spec.K;

  // Nodes of each block in increasing order; row i only looks at j > i.
  std::vector<std::vector<std::uint32_t>> members(static_cast<std::size_t>(K));
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= K) throw ValidationError("label out of range");
    members[static_cast<std::size_t>(labels[i])].push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<Edge> edges;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, {stream::kEdgeRow, i});
    const int a = labels[i];
    for (int b = 0; b < K; ++b) {
      const ZeroInflatedSpec law = spec.edge_law(a, b);
      if (law.p <= 0.0) continue;
      const auto& list = members[static_cast<std::size_t>(b)];
      auto pos = static_cast<std::size_t>(
          std::upper_bound(list.begin(), list.end(), static_cast<std::uint32_t>(i)) - list.begin());
      // Geometric skipping over candidates: each is present with probability p.
      const double log_q = std::log1p(-law.p);
      while (true) {
        if (law.p < 1.0) {
          const double u = unif(rng);
          const double skip = std::floor(std::log1p(-u) / log_q);
          if (skip >= static_cast<double>(list.size() - pos)) break;
          pos += static_cast<std::size_t>(skip);
        }
        if (pos >= list.size()) break;
        double w = 1.0;
        if (spec.weight_family) {
          w = sample(*spec.weight_family, law.theta, rng);
          if (options.zero_mode == ZeroMode::Truncated && spec.weight_family->discrete()) {
            if (zero_mass(*spec.weight_family, grad_psi(*spec.weight_family, law.theta)) >= 1.0) {
              throw DomainError("truncated weight law has no mass away from zero");
            }
            while (w == 0.0) w = sample(*spec.weight_family, law.theta, rng);
          }
        }
        if (w != 0.0) edges.push_back({static_cast<std::uint32_t>(i), list[pos], w});
        ++pos;
      }
    }
  }

  const int d = spec.attr_dim();
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(n), d);
  if (spec.attr_family) {
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = make_stream(seed, {stream::kAttribute, i});
      const Vec y = sample(*spec.attr_family, spec.attr_eta[static_cast<std::size_t>(labels[i])], rng);
      for (int k = 0; k < d; ++k) Y(static_cast<Eigen::Index>(i), k) = y[static_cast<std::size_t>(k)];
    }
  }
  return Dataset(n, std::move(edges), std::move(Y), labels, !spec.weight_family.has_value());
}

}  // namespace csbm
