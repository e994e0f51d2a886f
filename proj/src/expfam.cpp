#include "csbm/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "csbm/errors.hpp"

namespace csbm {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

void require(bool ok, const Family& f, const char* what) {
  if (!ok) throw DomainError(f.name() + ": " + what);
}

void require_dim(const Family& f, std::span<const double> v) {
  if (static_cast<int>(v.size()) != f.dim()) {
    throw DomainError(f.name() + ": expected dimension " + std::to_string(f.dim()) + ", got " +
                      std::to_string(v.size()));
  }
}

std::span<const double> one(const double& x) { return {&x, 1}; }

}  // namespace

Family Family::gaussian(double variance, int dim) {
  if (!(variance > 0.0) || !std::isfinite(variance)) throw ValidationError("gaussian: variance must be positive");
  if (dim < 1) throw ValidationError("gaussian: dim must be positive");
  Family f(FamilyKind::Gaussian);
  f.variance_ = variance;
  f.dim_ = dim;
  return f;
}

Family Family::gamma(double shape) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw ValidationError("gamma: shape must be positive");
  Family f(FamilyKind::Gamma);
  f.shape_ = shape;
  return f;
}

std::string Family::name() const {
  switch (kind_) {
    case FamilyKind::Bernoulli: return "bernoulli";
    case FamilyKind::Poisson: return "poisson";
    case FamilyKind::Gaussian: return "gaussian";
    case FamilyKind::Exponential: return "exponential";
    case FamilyKind::Gamma: return "gamma";
  }
  return "unknown";
}

bool Family::in_natural_domain(std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != dim_) return false;
  for (double t : theta) {
    if (!std::isfinite(t)) return false;
  }
  switch (kind_) {
    case FamilyKind::Exponential:
    case FamilyKind::Gamma: return theta[0] < 0.0;
    default: return true;
  }
}

bool Family::in_mean_domain(std::span<const double> mu) const {
  if (static_cast<int>(mu.size()) != dim_) return false;
  for (double m : mu) {
    if (!std::isfinite(m)) return false;
  }
  switch (kind_) {
    case FamilyKind::Bernoulli: return mu[0] > 0.0 && mu[0] < 1.0;
    case FamilyKind::Poisson:
    case FamilyKind::Exponential:
    case FamilyKind::Gamma: return mu[0] > 0.0;
    case FamilyKind::Gaussian: return true;
  }
  return false;
}

bool Family::in_support(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) return false;
  for (double e : x) {
    if (!std::isfinite(e)) return false;
  }
  switch (kind_) {
    case FamilyKind::Bernoulli: return x[0] >= 0.0 && x[0] <= 1.0;
    case FamilyKind::Poisson: return x[0] >= 0.0;
    case FamilyKind::Exponential:
    case FamilyKind::Gamma: return x[0] > 0.0;
    case FamilyKind::Gaussian: return true;
  }
  return false;
}

Vec Family::project_mean(std::span<const double> mu, double eps) const {
  Vec out(mu.begin(), mu.end());
  switch (kind_) {
    case FamilyKind::Bernoulli: out[0] = std::clamp(out[0], eps, 1.0 - eps); break;
    case FamilyKind::Poisson:
    case FamilyKind::Exponential:
    case FamilyKind::Gamma: out[0] = std::max(out[0], eps); break;
    case FamilyKind::Gaussian: break;
  }
  return out;
}

double psi(const Family& f, std::span<const double> theta) {
  require_dim(f, theta);
  require(f.in_natural_domain(theta), f, "theta outside natural domain");
  switch (f.kind()) {
    case FamilyKind::Bernoulli: {
      const double t = theta[0];
      // log(1 + e^t) without overflow.
      return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }
    case FamilyKind::Poisson: return std::exp(theta[0]);
    case FamilyKind::Gaussian: return 0.5 * f.variance() * squared_norm(theta);
    case FamilyKind::Exponential: return -std::log(-theta[0]);
    case FamilyKind::Gamma: return -f.shape() * std::log(-theta[0]);
  }
  return 0.0;
}

double psi_star(const Family& f, std::span<const double> x) {
  require_dim(f, x);
  require(f.in_support(x), f, "observation outside conjugate domain");
  const double v = x[0];
  switch (f.kind()) {
    case FamilyKind::Bernoulli: return xlogx(v) + xlogx(1.0 - v);
    case FamilyKind::Poisson: return xlogx(v) - v;
    case FamilyKind::Gaussian: return squared_norm(x) / (2.0 * f.variance());
    case FamilyKind::Exponential: return -1.0 - std::log(v);
    case FamilyKind::Gamma: return -f.shape() + f.shape() * std::log(f.shape() / v);
  }
  return 0.0;
}

Vec grad_psi(const Family& f, std::span<const double> theta) {
  require_dim(f, theta);
  require(f.in_natural_domain(theta), f, "theta outside natural domain");
  Vec mu(theta.begin(), theta.end());
  switch (f.kind()) {
    case FamilyKind::Bernoulli: mu[0] = 1.0 / (1.0 + std::exp(-theta[0])); break;
    case FamilyKind::Poisson: mu[0] = std::exp(theta[0]); break;
    case FamilyKind::Gaussian:
      for (auto& m : mu) m *= f.variance();
      break;
    case FamilyKind::Exponential: mu[0] = -1.0 / theta[0]; break;
    case FamilyKind::Gamma: mu[0] = -f.shape() / theta[0]; break;
  }
  return mu;
}

Vec mean_to_natural(const Family& f, std::span<const double> mu) {
  require_dim(f, mu);
  require(f.in_mean_domain(mu), f, "mean outside open mean domain");
  Vec theta(mu.begin(), mu.end());
  switch (f.kind()) {
    case FamilyKind::Bernoulli: theta[0] = std::log(mu[0] / (1.0 - mu[0])); break;
    case FamilyKind::Poisson: theta[0] = std::log(mu[0]); break;
    case FamilyKind::Gaussian:
      for (auto& t : theta) t /= f.variance();
      break;
    case FamilyKind::Exponential: theta[0] = -1.0 / mu[0]; break;
    case FamilyKind::Gamma: theta[0] = -f.shape() / mu[0]; break;
  }
  return theta;
}

double bregman(const Family& f, std::span<const double> x, std::span<const double> mu) {
  require_dim(f, x);
  require_dim(f, mu);
  require(f.in_support(x), f, "observation outside conjugate domain");
  require(f.in_mean_domain(mu), f, "mean on or outside the domain boundary");
  const double v = x[0];
  const double m = mu[0];
  double d = 0.0;
  switch (f.kind()) {
    case FamilyKind::Bernoulli:
      d = (v > 0.0 ? v * std::log(v / m) : 0.0) + (v < 1.0 ? (1.0 - v) * std::log((1.0 - v) / (1.0 - m)) : 0.0);
      break;
    case FamilyKind::Poisson: d = (v > 0.0 ? v * std::log(v / m) : 0.0) - v + m; break;
    case FamilyKind::Gaussian: {
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - mu[k]) * (x[k] - mu[k]);
      d = s / (2.0 * f.variance());
      break;
    }
    case FamilyKind::Exponential: {
      const double r = v / m;
      d = r - std::log(r) - 1.0;
      break;
    }
    case FamilyKind::Gamma: {
      const double r = v / m;
      d = f.shape() * (r - std::log(r) - 1.0);
      break;
    }
  }
  // Rounding can leave tiny negatives near x == mu.
  return d > 0.0 ? d : 0.0;
}

double log_density(const Family& f, std::span<const double> theta, std::span<const double> x) {
  require_dim(f, x);
  require(f.in_support(x), f, "observation outside support");
  double dot = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) dot += theta[k] * x[k];
  return dot - psi(f, theta);
}

double psi(const Family& f, double theta) { return psi(f, one(theta)); }
double psi_star(const Family& f, double x) { return psi_star(f, one(x)); }
double grad_psi(const Family& f, double theta) { return grad_psi(f, one(theta))[0]; }
double mean_to_natural(const Family& f, double mu) { return mean_to_natural(f, one(mu))[0]; }
double bregman(const Family& f, double x, double mu) { return bregman(f, one(x), one(mu)); }
double log_density(const Family& f, double theta, double x) { return log_density(f, one(theta), one(x)); }

double zero_mass(const Family& f, double mu) {
  switch (f.kind()) {
    case FamilyKind::Bernoulli: return 1.0 - mu;
    case FamilyKind::Poisson: return std::exp(-mu);
    default: return 0.0;
  }
}

Vec sample(const Family& f, std::span<const double> theta, Rng& rng) {
  const Vec mu = grad_psi(f, theta);
  Vec x(mu.size());
  switch (f.kind()) {
    case FamilyKind::Bernoulli: x[0] = std::bernoulli_distribution(mu[0])(rng) ? 1.0 : 0.0; break;
    case FamilyKind::Poisson: x[0] = static_cast<double>(std::poisson_distribution<long long>(mu[0])(rng)); break;
    case FamilyKind::Gaussian: {
      std::normal_distribution<double> normal(0.0, std::sqrt(f.variance()));
      for (std::size_t k = 0; k < mu.size(); ++k) x[k] = mu[k] + normal(rng);
      break;
    }
    case FamilyKind::Exponential: x[0] = std::exponential_distribution<double>(-theta[0])(rng); break;
    case FamilyKind::Gamma: x[0] = std::gamma_distribution<double>(f.shape(), -1.0 / theta[0])(rng); break;
  }
  return x;
}

double sample(const Family& f, double theta, Rng& rng) { return sample(f, one(theta), rng)[0]; }

void ZeroInflatedSpec::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("zero-inflated: p must lie in [0, 1]");
  if (weight_family.dim() != 1) throw ValidationError("zero-inflated: weight family must be scalar");
  if (!weight_family.in_natural_domain(one(theta))) throw ValidationError("zero-inflated: theta outside natural domain");
}

double sample_zero_inflated(const ZeroInflatedSpec& spec, Rng& rng, ZeroMode mode) {
  if (spec.p <= 0.0) return 0.0;
  if (spec.p < 1.0 && !std::bernoulli_distribution(spec.p)(rng)) return 0.0;
  double x = sample(spec.weight_family, spec.theta, rng);
  if (mode == ZeroMode::Truncated && spec.weight_family.discrete()) {
    const double p0 = zero_mass(spec.weight_family, grad_psi(spec.weight_family, spec.theta));
    if (p0 >= 1.0) throw DomainError("truncated weight law has no mass away from zero");
    while (x == 0.0) x = sample(spec.weight_family, spec.theta, rng);
  }
  return x;
}

void to_json(nlohmann::json& j, const Family& f) {
  j = nlohmann::json{{"kind", f.name()}, {"params", nlohmann::json::object()}};
  if (f.kind() == FamilyKind::Gaussian) {
    j["params"]["variance"] = f.variance();
    j["params"]["dim"] = f.dim();
  } else if (f.kind() == FamilyKind::Gamma) {
    j["params"]["shape"] = f.shape();
  }
}

void from_json(const nlohmann::json& j, Family& f) { f = parse_family(j, "family"); }

Family parse_family(const nlohmann::json& j, const std::string& field) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw ValidationError(field + ": expected an object with a string \"kind\"");
  }
  const auto kind = j["kind"].get<std::string>();
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  auto number = [&](const char* key, double fallback) {
    if (!params.contains(key)) return fallback;
    if (!params[key].is_number()) throw ValidationError(field + ".params." + key + ": expected a number");
    return params[key].get<double>();
  };
  try {
    if (kind == "bernoulli") return Family::bernoulli();
    if (kind == "poisson") return Family::poisson();
    if (kind == "exponential") return Family::exponential();
    if (kind == "gaussian") return Family::gaussian(number("variance", 1.0), static_cast<int>(number("dim", 1.0)));
    if (kind == "gamma") {
      if (!params.contains("shape")) throw ValidationError("gamma requires params.shape");
      return Family::gamma(number("shape", 1.0));
    }
  } catch (const ValidationError& e) {
    throw ValidationError(field + ": " + e.what());
  }
  throw ValidationError(field + ".kind: unknown family \"" + kind + "\"");
}

Family parse_family_name(const std::string& spec) {
  // name[:key=value,key=value]
  const auto colon = spec.find(':');
  nlohmann::json j{{"kind", spec.substr(0, colon)}, {"params", nlohmann::json::object()}};
  if (colon != std::string::npos) {
    std::stringstream ss(spec.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw ValidationError("family option \"" + item + "\" is not key=value");
      try {
        j["params"][item.substr(0, eq)] = std::stod(item.substr(eq + 1));
      } catch (const std::logic_error&) {
        throw ValidationError("family option \"" + item + "\" has a non-numeric value");
      }
    }
  }
  return parse_family(j, "family");
}

}  // namespace csbm
