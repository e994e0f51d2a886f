#pragma once

// Bregman hard clustering of node-attributed networks.
//
// With s = 1(x != 0), the negative log-likelihood of a zero-inflated
// exponential-family observation is, up to terms that do not depend on the
// parameters,
//
//   -log f(x) = kl(s || p) + s d_{psi*}(x, mu),
//
// where kl is the binary KL divergence. Summing over pairs and adding the
// attribute terms d_{phi*}(Y_i, nu_{z_i}) gives the clustering objective. Each
// sweep re-estimates (p, mu, nu) from the current labels and moves every node
// to the block that minimizes its own contribution, all against the same
// parameter snapshot.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "csbm/expfam.hpp"
#include "csbm/model.hpp"

namespace csbm {

/// Divergences used by the clustering objective. An absent weight family
/// scores the network on presence only; an absent attribute family ignores Y.
struct ClusterModel {
  std::optional<Family> weight_family;
  std::optional<Family> attr_family;
};

/// How many pairs a diagonal block cell holds when estimating p_aa.
enum class DiagonalPairs {
  /// n_a (n_a - 1): the maximum-likelihood estimate for undirected pairs.
  Distinct,
  /// n_a^2: the matrix form (Z^T Z)^-1 Z^T A Z (Z^T Z)^-1.
  WithSelf,
};

struct ClusterConfig {
  int max_iter = 100;
  /// p is clamped to [clamp_eps, 1 - clamp_eps]; means are kept clamp_eps
  /// away from the boundary of their domain.
  double clamp_eps = 1e-8;
  std::size_t min_block_size = 1;
  std::uint64_t seed = 0;
  /// Discrete weight laws are zero-truncated in the likelihood.
  bool strict_weight_mode = false;
  /// Adds -log(n_a / n) to each node cost.
  bool use_log_prior = false;
  bool use_edges = true;
  bool use_attributes = true;
  /// Stop once the objective decreases by less than this.
  double tol = 1e-10;
  DiagonalPairs diagonal_pairs = DiagonalPairs::Distinct;

  void validate() const;
};

struct Params {
  int K = 0;
  Eigen::MatrixXd p_hat;   // K x K
  Eigen::MatrixXd mu_hat;  // K x K mean weights (untruncated mean in strict mode)
  Eigen::MatrixXd nu_hat;  // K x d
  std::vector<std::size_t> block_sizes;
  /// Cells without edges; their mu_hat is the global mean weight.
  std::vector<std::pair<int, int>> degenerate_cells;
};

/// Throws EmptyBlockError if some block has no node.
Params estimate_params(const Dataset& ds, const Labels& z, int K, const ClusterModel& model,
                       const ClusterConfig& config = {});

/// kl(s || p) + s d_{psi*}(x, mu), plus the truncation normalizer in strict mode.
double zero_inflated_nll(const std::optional<Family>& weight_family, double p, double mu, double x,
                         bool strict = false);

/// Contribution of node i to the objective when placed in block a, the other
/// nodes keeping their labels in z. O(K + deg(i)).
double node_nll(const Dataset& ds, std::size_t i, int a, const Labels& z, const Params& params,
                const ClusterModel& model, const ClusterConfig& config = {});

/// Same quantity summed over all j != i; O(n). Reference path.
double node_nll_dense(const Dataset& ds, std::size_t i, int a, const Labels& z, const Params& params,
                      const ClusterModel& model, const ClusterConfig& config = {});

/// Objective with every pair counted once.
double total_nll(const Dataset& ds, const Labels& z, const Params& params, const ClusterModel& model,
                 const ClusterConfig& config = {});

struct ClusterResult {
  Labels labels;
  Params params;
  /// Objective of each visited labeling, parameters re-estimated.
  std::vector<double> nll_history;
  int sweeps = 0;
  bool converged = false;
  std::vector<std::string> flags;
};

/// Alternates parameter estimation and batch reassignment until no label
/// changes, the objective stops decreasing, or max_iter sweeps. If a sweep
/// increases the objective the previous labeling is kept. Ties keep the
/// current label, then prefer the lowest block index. A block left with fewer
/// than min_block_size nodes takes the nodes with the largest current cost.
ClusterResult iterate(const Dataset& ds, const Labels& z0, int K, const ClusterModel& model,
                      const ClusterConfig& config = {});

struct BruteForceResult {
  Labels labels;
  double nll = 0.0;
  /// No labeling other than relabelings of `labels` attains the optimum.
  bool unique = true;
  std::size_t evaluated = 0;
};

/// Exhaustive minimization of total_nll over all K^n labelings (K^n <= 1e6).
/// With `oracle` the parameters are fixed; otherwise they are re-estimated per
/// labeling and labelings with an empty block are skipped. Ties go to the
/// lexicographically smallest labeling.
BruteForceResult brute_force_mle(const Dataset& ds, int K, const ClusterModel& model, const ClusterConfig& config = {},
                                 const std::optional<Params>& oracle = {});

nlohmann::json params_to_json(const Params& params);

}  // namespace csbm
