#include "csbm/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "csbm/errors.hpp"

namespace csbm {

namespace {

using nlohmann::json;

double number(const json& j, const std::string& field) {
  if (!j.contains(field) || !j[field].is_number()) throw ValidationError(field + ": expected a number");
  return j[field].get<double>();
}

Eigen::MatrixXd square(const json& j, const std::string& field, int K) {
  const json& m = j[field];
  if (!m.is_array() || static_cast<int>(m.size()) != K) {
    throw ValidationError(field + ": expected a " + std::to_string(K) + "x" + std::to_string(K) + " array");
  }
  Eigen::MatrixXd out(K, K);
  for (int a = 0; a < K; ++a) {
    if (!m[a].is_array() || static_cast<int>(m[a].size()) != K) {
      throw ValidationError(field + "[" + std::to_string(a) + "]: expected " + std::to_string(K) + " entries");
    }
    for (int b = 0; b < K; ++b) {
      if (!m[a][b].is_number()) throw ValidationError(field + ": entries must be numbers");
      out(a, b) = m[a][b].get<double>();
    }
  }
  return out;
}

Eigen::MatrixXd homogeneous(const json& j, const std::string& in, const std::string& out, int K) {
  const double vin = number(j, in);
  const double vout = number(j, out);
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(K, K, vout);
  m.diagonal().setConstant(vin);
  return m;
}

std::vector<Vec> rows(const json& j, const std::string& field, int K, int d) {
  const json& m = j[field];
  if (!m.is_array() || static_cast<int>(m.size()) != K) {
    throw ValidationError(field + ": expected " + std::to_string(K) + " rows");
  }
  std::vector<Vec> out;
  for (int a = 0; a < K; ++a) {
    Vec v;
    if (m[a].is_number()) {
      v.push_back(m[a].get<double>());
    } else if (m[a].is_array()) {
      for (const auto& e : m[a]) {
        if (!e.is_number()) throw ValidationError(field + ": entries must be numbers");
        v.push_back(e.get<double>());
      }
    } else {
      throw ValidationError(field + "[" + std::to_string(a) + "]: expected a number or an array");
    }
    if (static_cast<int>(v.size()) != d) {
      throw ValidationError(field + "[" + std::to_string(a) + "]: expected dimension " + std::to_string(d));
    }
    out.push_back(std::move(v));
  }
  return out;
}

int infer_k(const json& j) {
  if (j.contains("K")) {
    if (!j["K"].is_number_integer()) throw ValidationError("K: expected an integer");
    return j["K"].get<int>();
  }
  for (const char* key : {"pi", "edge_prob", "alpha", "attr_mean", "attr_eta"}) {
    if (j.contains(key) && j[key].is_array()) return static_cast<int>(j[key].size());
  }
  throw ValidationError("K: missing and cannot be inferred");
}

}  // namespace

CsbmSpec parse_model_config(const json& j) {
  if (!j.is_object()) throw ValidationError("model config must be a JSON object");
  CsbmSpec spec;
  // 1e6 parses as a float; accept it when integral.
  if (!j.contains("n") || !j["n"].is_number() || j["n"].get<double>() < 1 ||
      std::floor(j["n"].get<double>()) != j["n"].get<double>() || j["n"].get<double>() > 1e15) {
    throw ValidationError("n: expected a positive integer");
  }
  spec.n = static_cast<std::size_t>(j["n"].get<double>());
  spec.K = infer_k(j);
  const int K = spec.K;
  if (K < 2) throw ValidationError("K: must be at least 2");
  const double n = static_cast<double>(spec.n);
  const double log_n = std::log(n);

  if (j.contains("pi")) {
    if (!j["pi"].is_array()) throw ValidationError("pi: expected an array");
    for (const auto& p : j["pi"]) {
      if (!p.is_number()) throw ValidationError("pi: entries must be numbers");
      spec.pi.push_back(p.get<double>());
    }
  } else {
    spec.pi.assign(static_cast<std::size_t>(K), 1.0 / K);
  }

  int rate_forms = 0;
  if (j.contains("edge_prob")) {
    spec.edge_prob = square(j, "edge_prob", K);
    ++rate_forms;
  }
  if (j.contains("alpha")) {
    spec.edge_prob = square(j, "alpha", K) * (log_n / n);
    ++rate_forms;
  }
  if (j.contains("p_in") || j.contains("p_out")) {
    spec.edge_prob = homogeneous(j, "p_in", "p_out", K);
    ++rate_forms;
  }
  if (j.contains("alpha_in") || j.contains("alpha_out")) {
    spec.edge_prob = homogeneous(j, "alpha_in", "alpha_out", K) * (log_n / n);
    ++rate_forms;
  }
  if (rate_forms == 0) spec.edge_prob = Eigen::MatrixXd::Zero(K, K);
  if (rate_forms > 1) throw ValidationError("edge rates: give exactly one of edge_prob, alpha, p_in/p_out, alpha_in/alpha_out");

  if (j.contains("weight_family") && !j["weight_family"].is_null()) {
    spec.weight_family = parse_family(j["weight_family"], "weight_family");
    const Family& f = *spec.weight_family;
    auto to_natural = [&](const Eigen::MatrixXd& mean, const std::string& field) {
      Eigen::MatrixXd theta(K, K);
      for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) {
          const double m = mean(a, b);
          if (!f.in_mean_domain(std::span<const double>(&m, 1))) {
            throw ValidationError(field + ": mean " + std::to_string(m) + " outside the mean domain of " + f.name());
          }
          theta(a, b) = mean_to_natural(f, m);
        }
      }
      return theta;
    };
    if (j.contains("weight_theta")) {
      spec.weight_theta = square(j, "weight_theta", K);
    } else if (j.contains("weight_mean")) {
      spec.weight_theta = to_natural(square(j, "weight_mean", K), "weight_mean");
    } else if (j.contains("weight_mean_in") || j.contains("weight_mean_out")) {
      spec.weight_theta = to_natural(homogeneous(j, "weight_mean_in", "weight_mean_out", K), "weight_mean_in/out");
    } else {
      throw ValidationError("weight_family: requires weight_theta, weight_mean or weight_mean_in/weight_mean_out");
    }
  }

  if (j.contains("attr_family") && !j["attr_family"].is_null()) {
    spec.attr_family = parse_family(j["attr_family"], "attr_family");
    const Family& f = *spec.attr_family;
    const int d = f.dim();
    double scale = 1.0;
    const std::string scale_name = j.value("attr_scale", std::string("none"));
    if (scale_name == "sqrt_log_n") {
      scale = std::sqrt(log_n);
    } else if (scale_name == "log_n") {
      scale = log_n;
    } else if (scale_name != "none") {
      throw ValidationError("attr_scale: expected none, sqrt_log_n or log_n");
    }
    std::vector<Vec> means;
    if (j.contains("attr_eta")) {
      spec.attr_eta = rows(j, "attr_eta", K, d);
    } else if (j.contains("attr_mean")) {
      means = rows(j, "attr_mean", K, d);
    } else if (j.contains("attr_radius")) {
      const double r = number(j, "attr_radius");
      if (f.kind() != FamilyKind::Gaussian) throw ValidationError("attr_radius: requires a gaussian attr_family");
      if (d < 2 && K > 2) throw ValidationError("attr_radius: K > 2 requires dim >= 2");
      for (int a = 0; a < K; ++a) {
        Vec m(static_cast<std::size_t>(d), 0.0);
        const double angle = 2.0 * std::numbers::pi * a / K;
        m[0] = r * std::cos(angle);
        if (d >= 2) m[1] = r * std::sin(angle);
        // cos/sin leave ~1e-16 residue at multiples of pi/2.
        for (auto& v : m) {
          if (std::abs(v) < 1e-15 * std::max(1.0, std::abs(r))) v = 0.0;
        }
        means.push_back(std::move(m));
      }
    } else {
      throw ValidationError("attr_family: requires attr_eta, attr_mean or attr_radius");
    }
    if (!means.empty()) {
      for (int a = 0; a < K; ++a) {
        for (auto& v : means[a]) v *= scale;
        if (!f.in_mean_domain(means[a])) {
          throw ValidationError("attr_mean[" + std::to_string(a) + "]: outside the mean domain of " + f.name());
        }
        spec.attr_eta.push_back(mean_to_natural(f, means[a]));
      }
    }
  }

  try {
    spec.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  return spec;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

json spec_to_json(const CsbmSpec& spec) {
  auto matrix = [](const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
      json row = json::array();
      for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(m(a, b));
      out.push_back(row);
    }
    return out;
  };
  json j{{"n", spec.n}, {"K", spec.K}, {"pi", spec.pi}, {"edge_prob", matrix(spec.edge_prob)}};
  if (spec.weight_family) {
    j["weight_family"] = *spec.weight_family;
    j["weight_theta"] = matrix(spec.weight_theta);
  }
  if (spec.attr_family) {
    j["attr_family"] = *spec.attr_family;
    j["attr_eta"] = spec.attr_eta;
  }
  return j;
}

std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace csbm
