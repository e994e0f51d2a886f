#include "csbm/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csbm/errors.hpp"

namespace csbm {

namespace {

std::span<const double> row_of(const Eigen::MatrixXd& Y, std::size_t i, Vec& buf) {
  buf.resize(static_cast<std::size_t>(Y.cols()));
  for (Eigen::Index k = 0; k < Y.cols(); ++k) buf[static_cast<std::size_t>(k)] = Y(static_cast<Eigen::Index>(i), k);
  return buf;
}

std::span<const double> row_of(const Eigen::MatrixXd& M, int a, Vec& buf) {
  return row_of(M, static_cast<std::size_t>(a), buf);
}

bool attributes_active(const Dataset& ds, const ClusterModel& model, const ClusterConfig& config) {
  return config.use_attributes && model.attr_family && ds.attr_dim() > 0;
}

/// Untruncated Poisson mean whose zero-truncated mean is m (m > 1).
double untruncated_poisson_mean(double m) {
  if (m <= 1.0) return 0.0;
  double lam = m;  // m - lam = m e^{-lam} at the root; start from the right
  for (int it = 0; it < 100; ++it) {
    const double e = std::exp(-lam);
    const double g = lam - m * (1.0 - e);
    const double dg = 1.0 - m * e;
    const double next = lam - g / dg;
    if (!(next > 0.0)) {
      lam *= 0.5;
      continue;
    }
    if (std::abs(next - lam) < 1e-14 * lam) return next;
    lam = next;
  }
  return lam;
}

/// Per-sweep lookup tables for node costs.
struct CostTables {
  int K = 0;
  Eigen::MatrixXd absent;   // -log(1 - p_ab)
  Eigen::MatrixXd present;  // -log p_ab + log(1 - p_ab) + truncation normalizer
  std::vector<std::size_t> counts;
  Vec log_prior;
};

CostTables make_tables(const Params& params, const ClusterModel& model, const ClusterConfig& config, std::size_t n) {
  CostTables t;
  t.K = params.K;
  t.absent.resize(t.K, t.K);
  t.present.resize(t.K, t.K);
  const bool strict = config.strict_weight_mode && model.weight_family && model.weight_family->discrete();
  for (int a = 0; a < t.K; ++a) {
    for (int b = 0; b < t.K; ++b) {
      const double p = params.p_hat(a, b);
      t.absent(a, b) = -std::log1p(-p);
      t.present(a, b) = -std::log(p) + std::log1p(-p);
      if (strict) t.present(a, b) += std::log1p(-zero_mass(*model.weight_family, params.mu_hat(a, b)));
    }
  }
  t.counts = params.block_sizes;
  t.log_prior.resize(static_cast<std::size_t>(t.K));
  for (int a = 0; a < t.K; ++a) {
    t.log_prior[static_cast<std::size_t>(a)] =
        std::log(static_cast<double>(params.block_sizes[static_cast<std::size_t>(a)]) / static_cast<double>(n));
  }
  return t;
}

/// Costs of node i for every block.
void node_costs(const Dataset& ds, std::size_t i, const Labels& z, const Params& params, const CostTables& t,
                const ClusterModel& model, const ClusterConfig& config, Vec& costs, Vec& buf) {
  const int K = t.K;
  costs.assign(static_cast<std::size_t>(K), 0.0);
  const int zi = z[i];
  if (config.use_edges) {
    const auto nb = ds.neighbors(i);
    const auto w = ds.neighbor_weights(i);
    for (int a = 0; a < K; ++a) {
      double c = 0.0;
      for (int b = 0; b < K; ++b) {
        const double others = static_cast<double>(t.counts[static_cast<std::size_t>(b)]) - (zi == b ? 1.0 : 0.0);
        c += others * t.absent(a, b);
      }
      for (std::size_t k = 0; k < nb.size(); ++k) {
        const int b = z[nb[k]];
        c += t.present(a, b);
        if (model.weight_family) c += bregman(*model.weight_family, w[k], params.mu_hat(a, b));
      }
      costs[static_cast<std::size_t>(a)] = c;
    }
  }
  if (attributes_active(ds, model, config)) {
    Vec nu_buf;
    const auto y = row_of(ds.attributes(), i, buf);
    for (int a = 0; a < K; ++a) {
      costs[static_cast<std::size_t>(a)] += bregman(*model.attr_family, y, row_of(params.nu_hat, a, nu_buf));
    }
  }
  if (config.use_log_prior) {
    for (int a = 0; a < K; ++a) costs[static_cast<std::size_t>(a)] -= t.log_prior[static_cast<std::size_t>(a)];
  }
}

void check_labels(const Labels& z, std::size_t n, int K) {
  if (z.size() != n) throw ValidationError("label vector length != n");
  for (int zi : z) {
    if (zi < 0 || zi >= K) throw ValidationError("label out of range [0, K)");
  }
}

}  // namespace

void ClusterConfig::validate() const {
  if (max_iter < 1) throw ValidationError("max_iter must be positive");
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw ValidationError("clamp_eps must lie in (0, 0.5)");
  if (!(tol >= 0.0)) throw ValidationError("tol must be nonnegative");
}

Params estimate_params(const Dataset& ds, const Labels& z, int K, const ClusterModel& model,
                       const ClusterConfig& config) {
  config.validate();
  const std::size_t n = ds.n();
  check_labels(z, n, K);
  Params p;
  p.K = K;
  p.block_sizes.assign(static_cast<std::size_t>(K), 0);
  for (int zi : z) ++p.block_sizes[static_cast<std::size_t>(zi)];
  for (int a = 0; a < K; ++a) {
    if (p.block_sizes[static_cast<std::size_t>(a)] == 0) throw EmptyBlockError(a);
  }

  // (Z^T A Z) and (Z^T X Z): each undirected edge contributes A_ij and A_ji.
  Eigen::MatrixXd edge_count = Eigen::MatrixXd::Zero(K, K);
  Eigen::MatrixXd weight_sum = Eigen::MatrixXd::Zero(K, K);
  double total_w = 0.0;
  for (const Edge& e : ds.edges()) {
    const int a = z[e.i], b = z[e.j];
    edge_count(a, b) += 1.0;
    edge_count(b, a) += 1.0;
    weight_sum(a, b) += e.w;
    weight_sum(b, a) += e.w;
    total_w += e.w;
  }

  const double eps = config.clamp_eps;
  p.p_hat.resize(K, K);
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      const double na = static_cast<double>(p.block_sizes[static_cast<std::size_t>(a)]);
      const double nb = static_cast<double>(p.block_sizes[static_cast<std::size_t>(b)]);
      double pairs = na * nb;
      if (a == b && config.diagonal_pairs == DiagonalPairs::Distinct) pairs = na * (na - 1.0);
      const double raw = pairs > 0.0 ? edge_count(a, b) / pairs : 0.0;
      p.p_hat(a, b) = std::clamp(raw, eps, 1.0 - eps);
    }
  }

  p.mu_hat = Eigen::MatrixXd::Ones(K, K);
  if (model.weight_family) {
    const Family& f = *model.weight_family;
    const bool strict = config.strict_weight_mode && f.kind() == FamilyKind::Poisson;
    double global = ds.num_edges() > 0 ? total_w / static_cast<double>(ds.num_edges()) : 1.0;
    for (int a = 0; a < K; ++a) {
      for (int b = 0; b < K; ++b) {
        double m = global;
        if (edge_count(a, b) > 0.0) {
          m = weight_sum(a, b) / edge_count(a, b);
        } else if (a <= b) {
          p.degenerate_cells.emplace_back(a, b);
        }
        if (strict) m = untruncated_poisson_mean(m);
        p.mu_hat(a, b) = f.project_mean(std::span<const double>(&m, 1), eps)[0];
      }
    }
  }

  const int d = ds.attr_dim();
  p.nu_hat = Eigen::MatrixXd::Zero(K, d);
  if (d > 0) {
    for (std::size_t i = 0; i < n; ++i) p.nu_hat.row(z[i]) += ds.attributes().row(static_cast<Eigen::Index>(i));
    for (int a = 0; a < K; ++a) p.nu_hat.row(a) /= static_cast<double>(p.block_sizes[static_cast<std::size_t>(a)]);
    if (model.attr_family && model.attr_family->dim() == d) {
      Vec buf;
      for (int a = 0; a < K; ++a) {
        const Vec projected = model.attr_family->project_mean(row_of(p.nu_hat, a, buf), eps);
        for (int k = 0; k < d; ++k) p.nu_hat(a, k) = projected[static_cast<std::size_t>(k)];
      }
    }
  }
  return p;
}

double zero_inflated_nll(const std::optional<Family>& weight_family, double p, double mu, double x, bool strict) {
  if (x == 0.0) return -std::log1p(-p);
  double v = -std::log(p);
  if (weight_family) {
    v += bregman(*weight_family, x, mu);
    if (strict && weight_family->discrete()) v += std::log1p(-zero_mass(*weight_family, mu));
  }
  return v;
}

double node_nll(const Dataset& ds, std::size_t i, int a, const Labels& z, const Params& params,
                const ClusterModel& model, const ClusterConfig& config) {
  const CostTables t = make_tables(params, model, config, ds.n());
  Vec costs, buf;
  node_costs(ds, i, z, params, t, model, config, costs, buf);
  return costs[static_cast<std::size_t>(a)];
}

double node_nll_dense(const Dataset& ds, std::size_t i, int a, const Labels& z, const Params& params,
                      const ClusterModel& model, const ClusterConfig& config) {
  double total = 0.0;
  if (config.use_edges) {
    for (std::size_t j = 0; j < ds.n(); ++j) {
      if (j == i) continue;
      const int b = z[j];
      total += zero_inflated_nll(model.weight_family, params.p_hat(a, b), params.mu_hat(a, b), ds.weight(i, j),
                                 config.strict_weight_mode);
    }
  }
  if (attributes_active(ds, model, config)) {
    Vec ybuf, nbuf;
    total += bregman(*model.attr_family, row_of(ds.attributes(), i, ybuf), row_of(params.nu_hat, a, nbuf));
  }
  if (config.use_log_prior) {
    total -= std::log(static_cast<double>(params.block_sizes[static_cast<std::size_t>(a)]) / static_cast<double>(ds.n()));
  }
  return total;
}

double total_nll(const Dataset& ds, const Labels& z, const Params& params, const ClusterModel& model,
                 const ClusterConfig& config) {
  const int K = params.K;
  check_labels(z, ds.n(), K);
  double total = 0.0;
  if (config.use_edges) {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(K), 0);
    for (int zi : z) ++sizes[static_cast<std::size_t>(zi)];
    Eigen::MatrixXd present = Eigen::MatrixXd::Zero(K, K);  // unordered edge count per cell (a <= b)
    for (const Edge& e : ds.edges()) {
      const int a = std::min(z[e.i], z[e.j]), b = std::max(z[e.i], z[e.j]);
      present(a, b) += 1.0;
      total += zero_inflated_nll(model.weight_family, params.p_hat(a, b), params.mu_hat(a, b), e.w,
                                 config.strict_weight_mode);
    }
    for (int a = 0; a < K; ++a) {
      for (int b = a; b < K; ++b) {
        const double na = static_cast<double>(sizes[static_cast<std::size_t>(a)]);
        const double nb = static_cast<double>(sizes[static_cast<std::size_t>(b)]);
        const double pairs = a == b ? na * (na - 1.0) / 2.0 : na * nb;
        total += (pairs - present(a, b)) * -std::log1p(-params.p_hat(a, b));
      }
    }
  }
  if (attributes_active(ds, model, config)) {
    Vec ybuf, nbuf;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      total += bregman(*model.attr_family, row_of(ds.attributes(), i, ybuf), row_of(params.nu_hat, z[i], nbuf));
    }
  }
  if (config.use_log_prior) {
    for (int zi : z) {
      total -= std::log(static_cast<double>(params.block_sizes[static_cast<std::size_t>(zi)]) / static_cast<double>(ds.n()));
    }
  }
  return total;
}

ClusterResult iterate(const Dataset& ds, const Labels& z0, int K, const ClusterModel& model,
                      const ClusterConfig& config) {
  config.validate();
  const std::size_t n = ds.n();
  check_labels(z0, n, K);
  if (n < static_cast<std::size_t>(K) * std::max<std::size_t>(config.min_block_size, 1)) {
    throw ValidationError("n too small for K blocks of the minimum size");
  }

  ClusterResult result;
  Labels z = z0;
  Params params = estimate_params(ds, z, K, model, config);
  double nll = total_nll(ds, z, params, model, config);
  result.nll_history.push_back(nll);

  Vec costs, buf;
  std::vector<double> assigned_cost(n);
  const std::size_t min_size = std::max<std::size_t>(config.min_block_size, 1);
  bool reseeded = false;

  while (result.sweeps < config.max_iter) {
    const CostTables tables = make_tables(params, model, config, n);
    Labels next(n);
    for (std::size_t i = 0; i < n; ++i) {
      node_costs(ds, i, z, params, tables, model, config, costs, buf);
      int best = z[i];
      for (int a = 0; a < K; ++a) {
        if (costs[static_cast<std::size_t>(a)] < costs[static_cast<std::size_t>(best)]) best = a;
      }
      next[i] = best;
      assigned_cost[i] = costs[static_cast<std::size_t>(best)];
    }
    ++result.sweeps;

    // Refill blocks that fell below the minimum size with the worst-fitting nodes.
    std::vector<std::size_t> sizes(static_cast<std::size_t>(K), 0);
    for (int zi : next) ++sizes[static_cast<std::size_t>(zi)];
    for (int b = 0; b < K; ++b) {
      while (sizes[static_cast<std::size_t>(b)] < min_size) {
        std::size_t worst = n;
        for (std::size_t i = 0; i < n; ++i) {
          const auto from = static_cast<std::size_t>(next[i]);
          if (next[i] == b || sizes[from] <= min_size) continue;
          if (worst == n || assigned_cost[i] > assigned_cost[worst]) worst = i;
        }
        if (worst == n) throw NumericError("cannot refill block " + std::to_string(b));
        --sizes[static_cast<std::size_t>(next[worst])];
        next[worst] = b;
        assigned_cost[worst] = -std::numeric_limits<double>::infinity();
        ++sizes[static_cast<std::size_t>(b)];
        reseeded = true;
      }
    }

    if (next == z) {
      result.converged = true;
      break;
    }
    Params next_params = estimate_params(ds, next, K, model, config);
    const double next_nll = total_nll(ds, next, next_params, model, config);
    if (next_nll > nll) {
      result.flags.push_back("objective_increase_reverted");
      result.converged = true;
      break;
    }
    z = std::move(next);
    params = std::move(next_params);
    result.nll_history.push_back(next_nll);
    const double decrease = nll - next_nll;
    nll = next_nll;
    if (decrease < config.tol) {
      result.converged = true;
      break;
    }
  }
  if (reseeded) result.flags.push_back("empty_block_reseeded");
  if (!params.degenerate_cells.empty()) result.flags.push_back("degenerate_cell");
  if (!result.converged) result.flags.push_back("max_iter_reached");
  result.labels = std::move(z);
  result.params = std::move(params);
  return result;
}

BruteForceResult brute_force_mle(const Dataset& ds, int K, const ClusterModel& model, const ClusterConfig& config,
                                 const std::optional<Params>& oracle) {
  const std::size_t n = ds.n();
  if (K < 1) throw ValidationError("K must be positive");
  double count = std::pow(static_cast<double>(K), static_cast<double>(n));
  if (count > 1e6) throw ValidationError("brute force over K^n = " + std::to_string(count) + " labelings (limit 1e6)");

  const auto total = static_cast<std::size_t>(std::llround(count));
  Labels z(n, 0);
  std::vector<std::pair<double, std::size_t>> scores;
  scores.reserve(total);
  std::vector<Labels> seen;
  BruteForceResult best;
  best.nll = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> sizes(static_cast<std::size_t>(K));
  std::vector<Labels> labelings;
  labelings.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    // Lexicographic order: node 0 is the most significant digit.
    std::size_t c = code;
    for (std::size_t i = n; i-- > 0;) {
      z[i] = static_cast<int>(c % static_cast<std::size_t>(K));
      c /= static_cast<std::size_t>(K);
    }
    double v = 0.0;
    if (oracle) {
      v = total_nll(ds, z, *oracle, model, config);
    } else {
      std::fill(sizes.begin(), sizes.end(), 0);
      for (int zi : z) ++sizes[static_cast<std::size_t>(zi)];
      if (std::find(sizes.begin(), sizes.end(), 0) != sizes.end()) continue;
      v = total_nll(ds, z, estimate_params(ds, z, K, model, config), model, config);
    }
    ++best.evaluated;
    scores.emplace_back(v, labelings.size());
    labelings.push_back(z);
    if (v < best.nll) {
      best.nll = v;
      best.labels = z;
    }
  }
  if (best.labels.empty()) throw ValidationError("no labeling with all blocks nonempty");

  // Unique up to relabeling: every labeling within rounding of the optimum
  // induces the same partition.
  auto canonical = [K](const Labels& l) {
    std::vector<int> map(static_cast<std::size_t>(K), -1);
    Labels out(l.size());
    int next = 0;
    for (std::size_t i = 0; i < l.size(); ++i) {
      auto& m = map[static_cast<std::size_t>(l[i])];
      if (m < 0) m = next++;
      out[i] = m;
    }
    return out;
  };
  const Labels best_canon = canonical(best.labels);
  const double tie_tol = 1e-9 * std::max(1.0, std::abs(best.nll));
  for (const auto& [v, idx] : scores) {
    if (v <= best.nll + tie_tol && canonical(labelings[idx]) != best_canon) {
      best.unique = false;
      break;
    }
  }
  return best;
}

nlohmann::json params_to_json(const Params& params) {
  auto matrix = [](const Eigen::MatrixXd& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(m(a, b));
      out.push_back(row);
    }
    return out;
  };
  nlohmann::json degenerate = nlohmann::json::array();
  for (auto [a, b] : params.degenerate_cells) degenerate.push_back({a, b});
  return {{"K", params.K},
          {"block_sizes", params.block_sizes},
          {"p_hat", matrix(params.p_hat)},
          {"mu_hat", matrix(params.mu_hat)},
          {"nu_hat", matrix(params.nu_hat)},
          {"degenerate_cells", degenerate}};
}

}  // namespace csbm
