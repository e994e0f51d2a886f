#pragma once

// Exponential families used for edge weights and node attributes.
//
// Each family is described by its cumulant (log-partition) function psi, the
// Legendre conjugate psi_star, the mean map grad_psi and its inverse, and the
// Bregman divergence generated by psi_star. Densities are taken relative to
// the family's canonical base measure, so that
//
//     log p_theta(x) = <theta, x> - psi(theta) = -bregman(x, mu) + psi_star(x)
//
// with mu = grad_psi(theta).
//
// Adding a family means extending FamilyKind and supplying psi, psi_star, both
// parameter maps, the sampler and the Bregman form in expfam.cpp.

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "csbm/rng.hpp"

namespace csbm {

using Vec = std::vector<double>;

enum class FamilyKind { Bernoulli, Poisson, Gaussian, Exponential, Gamma };

class Family {
 public:
  static Family bernoulli() { return Family(FamilyKind::Bernoulli); }
  static Family poisson() { return Family(FamilyKind::Poisson); }
  /// Spherical Gaussian N(mu, variance * I_dim).
  static Family gaussian(double variance = 1.0, int dim = 1);
  /// Exponential parameterized by its rate; theta = -rate.
  static Family exponential() { return Family(FamilyKind::Exponential); }
  /// Gamma with fixed shape k; theta = -rate.
  static Family gamma(double shape);

  FamilyKind kind() const { return kind_; }
  double variance() const { return variance_; }
  double shape() const { return shape_; }
  int dim() const { return dim_; }
  bool discrete() const { return kind_ == FamilyKind::Bernoulli || kind_ == FamilyKind::Poisson; }
  std::string name() const;

  bool in_natural_domain(std::span<const double> theta) const;
  /// Open mean domain (where Bregman's second argument must live).
  bool in_mean_domain(std::span<const double> mu) const;
  /// Closure of the mean domain, where observations live.
  bool in_support(std::span<const double> x) const;

  /// Nearest point of the mean domain interior at distance >= eps from the boundary.
  Vec project_mean(std::span<const double> mu, double eps) const;

  friend bool operator==(const Family&, const Family&) = default;

 private:
  explicit Family(FamilyKind kind) : kind_(kind) {}

  FamilyKind kind_;
  double variance_ = 1.0;
  double shape_ = 1.0;
  int dim_ = 1;
};

double psi(const Family& f, std::span<const double> theta);
double psi_star(const Family& f, std::span<const double> x);
Vec grad_psi(const Family& f, std::span<const double> theta);
Vec mean_to_natural(const Family& f, std::span<const double> mu);
/// d_{psi*}(x, mu); zero iff x == mu.
double bregman(const Family& f, std::span<const double> x, std::span<const double> mu);
double log_density(const Family& f, std::span<const double> theta, std::span<const double> x);

// Scalar conveniences for one-dimensional families.
double psi(const Family& f, double theta);
double psi_star(const Family& f, double x);
double grad_psi(const Family& f, double theta);
double mean_to_natural(const Family& f, double mu);
double bregman(const Family& f, double x, double mu);
double log_density(const Family& f, double theta, double x);

/// Probability that a draw equals zero (0 for continuous families).
double zero_mass(const Family& f, double mu);

Vec sample(const Family& f, std::span<const double> theta, Rng& rng);
double sample(const Family& f, double theta, Rng& rng);

struct ZeroInflatedSpec {
  double p = 0.0;
  Family weight_family = Family::gaussian();
  double theta = 0.0;

  void validate() const;
};

/// How a discrete weight law that can itself emit 0 is treated.
enum class ZeroMode {
  /// A zero emitted by the weight law is an absent edge.
  AsAbsent,
  /// The weight law is truncated at zero (zeros are redrawn).
  Truncated,
};

/// (1 - p) delta_0 + p f_theta.
double sample_zero_inflated(const ZeroInflatedSpec& spec, Rng& rng, ZeroMode mode = ZeroMode::AsAbsent);

// {"kind": "gaussian", "params": {"variance": 1, "dim": 2}}
void to_json(nlohmann::json& j, const Family& f);
void from_json(const nlohmann::json& j, Family& f);
Family parse_family(const nlohmann::json& j, const std::string& field);
Family parse_family_name(const std::string& name);

}  // namespace csbm
