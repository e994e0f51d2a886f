#include "csbm/info.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "csbm/errors.hpp"

namespace csbm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEdge = 1e-6;

void require_order(double t) {
  if (!(t > 0.0 && t < 1.0)) throw DomainError("Renyi order t must lie in (0, 1)");
}

}  // namespace

double jensen_gap(double t, const Family& f, std::span<const double> theta1, std::span<const double> theta2) {
  if (theta1.size() != theta2.size()) throw DomainError("parameter dimensions differ");
  if (f.kind() == FamilyKind::Gaussian) {
    // Closed form avoids cancellation: t (1-t) sigma^2 |theta1 - theta2|^2 / 2.
    double s = 0.0;
    for (std::size_t k = 0; k < theta1.size(); ++k) s += (theta1[k] - theta2[k]) * (theta1[k] - theta2[k]);
    return 0.5 * t * (1.0 - t) * f.variance() * s;
  }
  Vec mix(theta1.size());
  for (std::size_t k = 0; k < mix.size(); ++k) mix[k] = t * theta1[k] + (1.0 - t) * theta2[k];
  const double gap = t * psi(f, theta1) + (1.0 - t) * psi(f, theta2) - psi(f, mix);
  return std::max(gap, 0.0);
}

double renyi(double t, const Family& f, std::span<const double> theta1, std::span<const double> theta2) {
  require_order(t);
  return jensen_gap(t, f, theta1, theta2) / (1.0 - t);
}

double renyi(double t, const Family& f, double theta1, double theta2) {
  return renyi(t, f, std::span<const double>(&theta1, 1), std::span<const double>(&theta2, 1));
}

double kl_divergence(const Family& f, std::span<const double> theta1, std::span<const double> theta2) {
  const Vec mu1 = grad_psi(f, theta1);
  double dot = 0.0;
  for (std::size_t k = 0; k < mu1.size(); ++k) dot += (theta2[k] - theta1[k]) * mu1[k];
  return std::max(psi(f, theta2) - psi(f, theta1) - dot, 0.0);
}

double scaled_renyi_zero_inflated(double t, double p1, double p2, double gap) {
  // bracket = (1-p1)^t (1-p2)^(1-t) + p1^t p2^(1-t) e^{-gap}, evaluated as
  // 1 + expm1(log of first term) + second term to keep precision when the
  // p's are tiny.
  const double log_absent = t * std::log1p(-p1) + (1.0 - t) * std::log1p(-p2);
  const double present = (p1 > 0.0 && p2 > 0.0) ? std::exp(t * std::log(p1) + (1.0 - t) * std::log(p2) - gap) : 0.0;
  const double excess = std::expm1(log_absent) + present;  // bracket - 1
  if (excess <= -1.0) return kInf;
  return std::max(-std::log1p(excess), 0.0);
}

double renyi_bernoulli(double t, double p1, double p2) {
  require_order(t);
  return scaled_renyi_zero_inflated(t, p1, p2, 0.0) / (1.0 - t);
}

double renyi_zero_inflated(double t, const ZeroInflatedSpec& z1, const ZeroInflatedSpec& z2) {
  require_order(t);
  z1.validate();
  z2.validate();
  if (!(z1.weight_family == z2.weight_family)) throw ValidationError("zero-inflated laws use different weight families");
  const double gap = jensen_gap(t, z1.weight_family, std::span<const double>(&z1.theta, 1),
                                std::span<const double>(&z2.theta, 1));
  return scaled_renyi_zero_inflated(t, z1.p, z2.p, gap) / (1.0 - t);
}

double chernoff_t(const CsbmSpec& spec, int a, int b, double t) {
  require_order(t);
  if (a == b || a < 0 || b < 0 || a >= spec.K || b >= spec.K) throw DomainError("chernoff_t: need distinct blocks in [0, K)");
  double total = 0.0;
  for (int c = 0; c < spec.K; ++c) {
    double gap = 0.0;
    if (spec.weight_family) {
      const double tb = spec.weight_theta(b, c);
      const double ta = spec.weight_theta(a, c);
      gap = jensen_gap(t, *spec.weight_family, std::span<const double>(&tb, 1), std::span<const double>(&ta, 1));
    }
    const double term = scaled_renyi_zero_inflated(t, spec.edge_prob(b, c), spec.edge_prob(a, c), gap);
    if (term == kInf) return kInf;
    total += spec.pi[static_cast<std::size_t>(c)] * term;
  }
  if (spec.attr_family) {
    total += jensen_gap(t, *spec.attr_family, spec.attr_eta[static_cast<std::size_t>(b)],
                        spec.attr_eta[static_cast<std::size_t>(a)]) /
             static_cast<double>(spec.n);
  }
  return total;
}

ScalarMax golden_section_max(const std::function<double(double)>& f, double lo, double hi, double tol) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  while (hi - lo > tol) {
    if (fc >= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - invphi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + invphi * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  ScalarMax best{mid, f(mid)};
  if (fc > best.value) best = {c, fc};
  if (fd > best.value) best = {d, fd};
  return best;
}

SupResult sup_over_t(const std::function<double(double)>& f) {
  const double f1 = f(0.25), f2 = f(0.5), f3 = f(0.75);
  for (auto [t, v] : {std::pair{0.25, f1}, std::pair{0.5, f2}, std::pair{0.75, f3}}) {
    if (v == kInf) return {kInf, t, false};
  }
  const double scale = std::max({std::abs(f1), std::abs(f2), std::abs(f3), 1e-300});
  if (f2 >= 0.5 * (f1 + f3) - 1e-12 * scale) {
    const ScalarMax m = golden_section_max(f, kEdge, 1.0 - kEdge, 1e-10);
    return {m.value, m.arg, false};
  }
  constexpr int kGrid = 1001;
  double best_t = kEdge, best_v = -kInf;
  int best_k = 0;
  for (int k = 0; k < kGrid; ++k) {
    const double t = kEdge + (1.0 - 2.0 * kEdge) * k / (kGrid - 1);
    const double v = f(t);
    if (v > best_v) {
      best_v = v;
      best_t = t;
      best_k = k;
    }
  }
  const double step = (1.0 - 2.0 * kEdge) / (kGrid - 1);
  const double lo = std::max(kEdge, kEdge + (best_k - 1) * step);
  const double hi = std::min(1.0 - kEdge, kEdge + (best_k + 1) * step);
  const ScalarMax m = golden_section_max(f, lo, hi, 1e-10);
  if (m.value > best_v) return {m.value, m.arg, true};
  return {best_v, best_t, true};
}

SupResult chernoff(const CsbmSpec& spec, int a, int b) {
  return sup_over_t([&](double t) { return chernoff_t(spec, a, b, t); });
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Possible: return "Possible";
    case Verdict::Impossible: return "Impossible";
    case Verdict::Critical: return "Critical";
  }
  return "unknown";
}

DivergenceReport min_divergence(const CsbmSpec& spec, double margin) {
  spec.validate();
  const int K = spec.K;
  DivergenceReport r;
  r.CH = Eigen::MatrixXd::Zero(K, K);
  r.t_star = Eigen::MatrixXd::Constant(K, K, 0.5);
  r.I_value = kInf;
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      if (a == b) continue;
      const SupResult s = chernoff(spec, a, b);
      r.CH(a, b) = s.value;
      r.t_star(a, b) = s.t_star;
      r.concavity_warning = r.concavity_warning || s.concavity_warning;
      if (s.value < r.I_value) {
        r.I_value = s.value;
        r.hardest_pair = {a, b};
      }
    }
  }
  const double n = static_cast<double>(spec.n);
  r.scaled = r.I_value == kInf ? kInf : n * r.I_value / std::log(n);
  if (r.scaled > 1.0 + margin) {
    r.verdict = Verdict::Possible;
  } else if (r.scaled < 1.0 - margin) {
    r.verdict = Verdict::Impossible;
  } else {
    r.verdict = Verdict::Critical;
  }
  return r;
}

nlohmann::json report_to_json(const DivergenceReport& report) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  auto matrix = [&](const Eigen::MatrixXd& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(num(m(a, b)));
      out.push_back(row);
    }
    return out;
  };
  return {{"CH", matrix(report.CH)},
          {"t_star", matrix(report.t_star)},
          {"I", num(report.I_value)},
          {"hardest_pair", {report.hardest_pair.first, report.hardest_pair.second}},
          {"scaled", num(report.scaled)},
          {"verdict", to_string(report.verdict)},
          {"concavity_warning", report.concavity_warning}};
}

ThresholdResult threshold_binary_gaussian(const Eigen::MatrixXd& alpha, const std::vector<Vec>& mu, double sigma,
                                          std::span<const double> pi) {
  const auto K = static_cast<int>(alpha.rows());
  if (K < 2 || alpha.cols() != K) throw ValidationError("alpha must be K x K with K >= 2");
  if (static_cast<int>(mu.size()) != K || static_cast<int>(pi.size()) != K) {
    throw ValidationError("mu and pi must have K entries");
  }
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
  if ((alpha.array() < 0.0).any()) throw ValidationError("alpha entries must be nonnegative");

  bool uninformative = (alpha.array() == alpha(0, 0)).all();
  for (const auto& m : mu) uninformative = uninformative && m == mu[0];
  if (uninformative) return {0.0, true};

  double best = kInf;
  for (int a = 0; a < K; ++a) {
    for (int b = 0; b < K; ++b) {
      if (a == b) continue;
      double dist2 = 0.0;
      for (std::size_t k = 0; k < mu[a].size(); ++k) dist2 += (mu[b][k] - mu[a][k]) * (mu[b][k] - mu[a][k]);
      auto g = [&](double t) {
        double s = 0.0;
        for (int c = 0; c < K; ++c) {
          const double ab = alpha(b, c), aa = alpha(a, c);
          s += pi[static_cast<std::size_t>(c)] * (t * ab + (1.0 - t) * aa - std::pow(ab, t) * std::pow(aa, 1.0 - t));
        }
        return s + t * (1.0 - t) * dist2 / (2.0 * sigma * sigma);
      };
      best = std::min(best, sup_over_t(g).value);
    }
  }
  return {best, false};
}

double threshold_semisupervised(double alpha, double beta, double eta0, double eta1, int K, double n) {
  if (alpha < 0.0 || beta < 0.0) throw ValidationError("rates must be nonnegative");
  if (eta0 < 0.0 || eta1 < 0.0 || eta0 + eta1 > 1.0 + 1e-15) throw ValidationError("need eta0, eta1 >= 0 and eta0 + eta1 <= 1");
  if (K < 2) throw ValidationError("K must be at least 2");
  if (!(n > 1.0)) throw ValidationError("n must exceed 1");
  const double eta = eta0 + eta1;
  const double arg = 1.0 - eta + 2.0 / std::sqrt(static_cast<double>(K - 1)) * std::sqrt(eta0 * eta1);
  const double gap = std::pow(std::sqrt(alpha) - std::sqrt(beta), 2);
  if (arg <= 0.0) return kInf;
  return gap - 2.0 / std::log(n) * std::log(arg) - K;
}

}  // namespace csbm
