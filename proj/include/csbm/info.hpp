#pragma once

// Information-theoretic threshold for exact recovery.
//
// For blocks a != b the Chernoff coefficient of order t is
//
//   CH_t(a,b) = (1 - t) [ sum_c pi_c D_t(f_bc || f_ac) + D_t(h_b || h_a) / n ]
//
// with D_t the Renyi divergence of order t, CH(a,b) = sup_t CH_t(a,b) and
// I = min_{a != b} CH(a,b). Exact recovery is possible when n I / log n > 1
// and impossible when it is < 1.
//
// All divergences are in nats. +infinity is a legitimate value (disjoint
// supports) and propagates through sup and min.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "csbm/expfam.hpp"
#include "csbm/model.hpp"

namespace csbm {

/// J_t(theta1 || theta2) = t psi(theta1) + (1-t) psi(theta2) - psi(t theta1 + (1-t) theta2).
/// Equals -log of the integral of p1^t p2^(1-t).
double jensen_gap(double t, const Family& f, std::span<const double> theta1, std::span<const double> theta2);

/// D_t(p_theta1 || p_theta2) = J_t / (1 - t).
double renyi(double t, const Family& f, std::span<const double> theta1, std::span<const double> theta2);
double renyi(double t, const Family& f, double theta1, double theta2);

/// KL(p_theta1 || p_theta2).
double kl_divergence(const Family& f, std::span<const double> theta1, std::span<const double> theta2);

/// Exact Renyi divergence between (1-p1) delta_0 + p1 f_theta1 and
/// (1-p2) delta_0 + p2 f_theta2. A missing weight family means unit weights.
double renyi_zero_inflated(double t, const ZeroInflatedSpec& z1, const ZeroInflatedSpec& z2);
/// Same between binary-network edge laws Ber(p1) and Ber(p2).
double renyi_bernoulli(double t, double p1, double p2);

/// -log( (1-p1)^t (1-p2)^(1-t) + p1^t p2^(1-t) e^{-gap} ), i.e. (1-t) D_t.
double scaled_renyi_zero_inflated(double t, double p1, double p2, double gap);

double chernoff_t(const CsbmSpec& spec, int a, int b, double t);

struct ScalarMax {
  double arg = 0.0;
  double value = 0.0;
};

/// Golden-section maximization of a unimodal function on [lo, hi].
ScalarMax golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-10);

/// Maximizes a function that is concave on (0, 1). If a three-point
/// concavity probe fails, falls back to a 1001-point grid with local
/// refinement and sets `concavity_warning`.
struct SupResult {
  double value = 0.0;
  double t_star = 0.5;
  bool concavity_warning = false;
};
SupResult sup_over_t(const std::function<double(double)>& f);

SupResult chernoff(const CsbmSpec& spec, int a, int b);

enum class Verdict { Possible, Impossible, Critical };
std::string to_string(Verdict v);

struct DivergenceReport {
  Eigen::MatrixXd CH;      // K x K, zero diagonal
  Eigen::MatrixXd t_star;  // K x K
  double I_value = 0.0;
  std::pair<int, int> hardest_pair{0, 1};
  double scaled = 0.0;  // n I / log n
  Verdict verdict = Verdict::Impossible;
  bool concavity_warning = false;
};

DivergenceReport min_divergence(const CsbmSpec& spec, double margin = 0.02);
nlohmann::json report_to_json(const DivergenceReport& report);

struct ThresholdResult {
  double value = 0.0;
  bool uninformative = false;
};

/// Asymptotic scaled divergence for Ber(alpha_ab log n / n) edges and
/// N(mu_a sqrt(log n), sigma^2 I) attributes:
///   min_{a != b} sup_t sum_c pi_c [t a_bc + (1-t) a_ac - a_bc^t a_ac^(1-t)]
///                       + t (1-t) |mu_b - mu_a|^2 / (2 sigma^2).
/// Exact recovery iff > 1.
ThresholdResult threshold_binary_gaussian(const Eigen::MatrixXd& alpha, const std::vector<Vec>& mu, double sigma,
                                          std::span<const double> pi);

/// Left-hand side minus K of the semi-supervised recovery condition with a
/// noisy label oracle (eta0 wrong-label mass, eta1 right-label mass).
/// Positive means exact recovery is possible.
double threshold_semisupervised(double alpha, double beta, double eta0, double eta1, int K, double n);

}  // namespace csbm
