#include "csbm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "csbm/config.hpp"
#include "csbm/dataset_io.hpp"
#include "csbm/errors.hpp"
#include "csbm/eval.hpp"

#ifndef CSBM_VERSION
#define CSBM_VERSION "unknown"
#endif

namespace csbm {

namespace {

using nlohmann::json;

json axis_value(double v) {
  if (std::floor(v) == v && std::abs(v) < 9e15) return static_cast<long long>(v);
  return v;
}

void set_key(json& config, const std::string& key, double v) {
  if (!key.empty() && key[0] == '/') {
    config[json::json_pointer(key)] = axis_value(v);
  } else {
    config[key] = axis_value(v);
  }
}

std::string metric_name(Metric m) { return m == Metric::MeanARI ? "ari" : "exact_recovery"; }

struct TrialOutcome {
  std::vector<std::optional<double>> values;  // one per method
  std::vector<std::string> errors;
};

double scaled_of(const json& config) { return min_divergence(parse_model_config(config)).scaled; }

}  // namespace

void ExperimentPlan::validate() const {
  if (trials < 1) throw ValidationError("trials: must be at least 1");
  if (axes.empty()) throw ValidationError("axes: at least one axis is required");
  for (const Axis& a : axes) {
    if (a.key.empty()) throw ValidationError("axes: empty key");
    if (a.values.empty()) throw ValidationError("axes." + a.key + ": no values");
  }
  if (methods.empty()) throw ValidationError("methods: at least one method is required");
  if (threshold_axis) {
    bool found = false;
    for (const Axis& a : axes) found = found || a.key == *threshold_axis;
    if (!found) throw ValidationError("threshold_axis: '" + *threshold_axis + "' is not a sweep axis");
  }
  if (!base.is_object()) throw ValidationError("base: expected a model config object");
}

std::size_t ExperimentPlan::num_cells() const {
  std::size_t n = 1;
  for (const Axis& a : axes) n *= a.values.size();
  return n;
}

std::vector<double> ExperimentPlan::cell_values(std::size_t cell) const {
  std::vector<double> out(axes.size());
  for (std::size_t k = axes.size(); k-- > 0;) {
    out[k] = axes[k].values[cell % axes[k].values.size()];
    cell /= axes[k].values.size();
  }
  return out;
}

json ExperimentPlan::cell_config(std::size_t cell) const {
  json config = base;
  const auto values = cell_values(cell);
  for (std::size_t k = 0; k < axes.size(); ++k) set_key(config, axes[k].key, values[k]);
  return config;
}

ExperimentPlan parse_plan(const json& j) {
  if (!j.is_object()) throw ValidationError("plan: expected a JSON object");
  ExperimentPlan plan;
  plan.source = j;
  if (!j.contains("base")) throw ValidationError("base: missing");
  plan.base = j["base"];
  if (!j.contains("axes") || !j["axes"].is_array()) throw ValidationError("axes: expected an array");
  for (const auto& a : j["axes"]) {
    if (!a.is_object() || !a.contains("key") || !a["key"].is_string()) {
      throw ValidationError("axes: each axis needs a string \"key\"");
    }
    Axis axis;
    axis.key = a["key"].get<std::string>();
    if (!a.contains("values") || !a["values"].is_array()) throw ValidationError("axes." + axis.key + ".values: expected an array");
    for (const auto& v : a["values"]) {
      if (!v.is_number()) throw ValidationError("axes." + axis.key + ".values: entries must be numbers");
      axis.values.push_back(v.get<double>());
    }
    plan.axes.push_back(std::move(axis));
  }
  if (!j.contains("trials") || !j["trials"].is_number_integer()) throw ValidationError("trials: expected an integer");
  plan.trials = j["trials"].get<int>();
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !j["seed"].is_number_integer()) throw ValidationError("seed: expected an integer");
    plan.seed = j["seed"].get<std::uint64_t>();
  }
  const std::string metric = j.value("metric", std::string("exact_recovery"));
  if (metric == "exact_recovery") {
    plan.metric = Metric::ExactRecoveryRate;
  } else if (metric == "ari") {
    plan.metric = Metric::MeanARI;
  } else {
    throw ValidationError("metric: expected exact_recovery or ari");
  }
  if (j.contains("methods")) {
    plan.methods.clear();
    if (!j["methods"].is_array()) throw ValidationError("methods: expected an array");
    for (const auto& m : j["methods"]) {
      if (!m.is_string()) throw ValidationError("methods: entries must be strings");
      plan.methods.push_back(parse_method(m.get<std::string>()));
    }
  }
  if (j.contains("threshold_axis") && !j["threshold_axis"].is_null()) {
    plan.threshold_axis = j["threshold_axis"].get<std::string>();
  }
  if (j.contains("cluster")) {
    if (!j["cluster"].is_object()) throw ValidationError("cluster: expected an object");
    plan.cluster = j["cluster"];
  }
  const std::string zero_mode = j.value("zero_mode", std::string("as_absent"));
  if (zero_mode == "as_absent") {
    plan.zero_mode = ZeroMode::AsAbsent;
  } else if (zero_mode == "truncated") {
    plan.zero_mode = ZeroMode::Truncated;
  } else {
    throw ValidationError("zero_mode: expected as_absent or truncated");
  }
  plan.validate();
  return plan;
}

ClusterModel cluster_model_for(const CsbmSpec& spec, const json& overrides) {
  ClusterModel model{spec.weight_family, spec.attr_family};
  if (overrides.contains("weight_family")) {
    const json& f = overrides["weight_family"];
    model.weight_family = f.is_null() ? std::nullopt : std::optional<Family>(parse_family(f, "cluster.weight_family"));
  }
  if (overrides.contains("attr_family")) {
    const json& f = overrides["attr_family"];
    model.attr_family = f.is_null() ? std::nullopt : std::optional<Family>(parse_family(f, "cluster.attr_family"));
  }
  return model;
}

ClusterConfig cluster_config_for(const json& overrides) {
  ClusterConfig config;
  try {
    config.max_iter = overrides.value("max_iter", config.max_iter);
    config.clamp_eps = overrides.value("clamp_eps", config.clamp_eps);
    config.strict_weight_mode = overrides.value("strict_weight_mode", config.strict_weight_mode);
    config.use_log_prior = overrides.value("use_log_prior", config.use_log_prior);
    config.min_block_size = overrides.value("min_block_size", config.min_block_size);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("cluster: ") + e.what());
  }
  config.validate();
  return config;
}

std::optional<double> threshold_crossing(const json& config, const std::string& axis, double lo, double hi,
                                         double tol) {
  auto f = [&](double x) {
    json c = config;
    set_key(c, axis, x);
    return scaled_of(c) - 1.0;
  };
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if ((flo < 0.0) == (fhi < 0.0)) return std::nullopt;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ExperimentResult run_experiment(const ExperimentPlan& plan, unsigned workers) {
  plan.validate();
  const std::size_t cells = plan.num_cells();
  const auto trials = static_cast<std::size_t>(plan.trials);
  const std::size_t methods = plan.methods.size();

  // Specs are parsed once per cell; a bad cell fails all of its trials.
  std::vector<std::optional<CsbmSpec>> specs(cells);
  std::vector<std::string> spec_errors(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    try {
      specs[c] = parse_model_config(plan.cell_config(c));
    } catch (const std::exception& e) {
      spec_errors[c] = e.what();
    }
  }
  const ClusterConfig cluster_config = cluster_config_for(plan.cluster);

  std::vector<TrialOutcome> outcomes(cells * trials);
  auto run_trial = [&](std::size_t task) {
    const std::size_t c = task / trials, t = task % trials;
    TrialOutcome& out = outcomes[task];
    out.values.assign(methods, std::nullopt);
    if (!specs[c]) {
      out.errors.assign(methods, spec_errors[c]);
      return;
    }
    const CsbmSpec& spec = *specs[c];
    const std::uint64_t seed = derive_seed(plan.seed, {stream::kTrial, c, t});
    try {
      const Dataset ds = generate(spec, seed, GenerateOptions{plan.zero_mode});
      const Labels& truth = *ds.labels();
      const ClusterModel model = cluster_model_for(spec, plan.cluster);
      for (std::size_t m = 0; m < methods; ++m) {
        try {
          RecoveryOptions options;
          options.method = plan.methods[m];
          options.seed = seed;
          options.cluster = cluster_config;
          const Recovery r = recover_communities(ds, spec.K, model, options);
          out.values[m] = plan.metric == Metric::MeanARI ? ari(truth, r.labels)
                                                         : (exact_recovery(truth, r.labels) ? 1.0 : 0.0);
        } catch (const std::exception& e) {
          out.errors.push_back(e.what());
        }
      }
    } catch (const std::exception& e) {
      out.errors.assign(methods, e.what());
    }
  };

  const std::size_t tasks = cells * trials;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) run_trial(task);
  };
  const unsigned pool = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(tasks)));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (unsigned w = 0; w < pool; ++w) threads.emplace_back(worker);
  }

  ExperimentResult result;
  result.plan = plan;
  for (std::size_t c = 0; c < cells; ++c) {
    CellResult cell;
    cell.axis_values = plan.cell_values(c);
    if (specs[c]) {
      const DivergenceReport rep = min_divergence(*specs[c]);
      cell.scaled_divergence = rep.scaled;
      cell.verdict = rep.verdict;
    } else {
      cell.scaled_divergence = std::nan("");
    }
    for (std::size_t m = 0; m < methods; ++m) {
      MethodStats s;
      s.method = plan.methods[m];
      s.trials = plan.trials;
      double sum = 0.0, sq = 0.0;
      int ok = 0;
      std::set<std::string> errors;
      for (std::size_t t = 0; t < trials; ++t) {
        const TrialOutcome& o = outcomes[c * trials + t];
        if (o.values[m]) {
          sum += *o.values[m];
          ++ok;
        } else {
          ++s.failures;
        }
      }
      for (std::size_t t = 0; t < trials; ++t) {
        for (const auto& e : outcomes[c * trials + t].errors) errors.insert(e);
      }
      s.mean = ok > 0 ? sum / ok : std::nan("");
      for (std::size_t t = 0; t < trials; ++t) {
        const auto& v = outcomes[c * trials + t].values[m];
        if (v) sq += (*v - s.mean) * (*v - s.mean);
      }
      s.std = ok > 1 ? std::sqrt(sq / (ok - 1)) : 0.0;
      s.errors.assign(errors.begin(), errors.end());
      cell.methods.push_back(std::move(s));
    }
    result.cells.push_back(std::move(cell));
  }

  if (plan.threshold_axis) {
    std::size_t axis_idx = 0;
    while (plan.axes[axis_idx].key != *plan.threshold_axis) ++axis_idx;
    const Axis& axis = plan.axes[axis_idx];
    const auto [lo_it, hi_it] = std::minmax_element(axis.values.begin(), axis.values.end());
    const std::size_t stride_cells = cells / axis.values.size();
    // One bisection per combination of the remaining axes; use the cell where
    // the threshold axis takes its first value as the template.
    for (std::size_t c = 0; c < cells && result.curve.size() < stride_cells; ++c) {
      const auto values = plan.cell_values(c);
      if (values[axis_idx] != axis.values.front()) continue;
      CurvePoint point;
      for (std::size_t k = 0; k < values.size(); ++k) {
        if (k != axis_idx) point.other.push_back(values[k]);
      }
      try {
        point.value = threshold_crossing(plan.cell_config(c), axis.key, *lo_it, *hi_it);
      } catch (const std::exception&) {
        point.value = std::nullopt;
      }
      result.curve.push_back(std::move(point));
    }
  }
  return result;
}

std::string version_string() { return CSBM_VERSION; }

std::string provenance_line(const json& config) {
  return "# csbm version=" + version_string() + " config_hash=" + config_hash(config);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return format_double(v);
}

std::string two_decimals(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_results_csv(const ExperimentResult& r, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << provenance_line(r.plan.source) << '\n';
  for (const Axis& a : r.plan.axes) out << a.key << ',';
  out << "method,metric,mean,std,trials,failures,scaled_divergence,verdict\n";
  for (const CellResult& cell : r.cells) {
    for (const MethodStats& s : cell.methods) {
      for (double v : cell.axis_values) out << fmt(v) << ',';
      out << to_string(s.method) << ',' << metric_name(r.plan.metric) << ',' << fmt(s.mean) << ',' << fmt(s.std)
          << ',' << s.trials << ',' << s.failures << ',' << fmt(cell.scaled_divergence) << ','
          << to_string(cell.verdict) << '\n';
    }
  }
}

void write_table_csv(const ExperimentResult& r, const std::filesystem::path& path) {
  if (r.plan.axes.size() != 1) throw ValidationError("table layout needs a single sweep axis");
  std::ofstream out = open_out(path);
  out << provenance_line(r.plan.source) << '\n';
  out << r.plan.axes[0].key;
  for (const CellResult& cell : r.cells) out << ',' << fmt(cell.axis_values[0]);
  out << '\n';
  for (std::size_t m = 0; m < r.plan.methods.size(); ++m) {
    out << to_string(r.plan.methods[m]);
    for (const CellResult& cell : r.cells) {
      out << ",\"" << two_decimals(cell.methods[m].mean) << " (" << two_decimals(cell.methods[m].std) << ")\"";
    }
    out << '\n';
  }
}

void write_curve_csv(const ExperimentResult& r, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << provenance_line(r.plan.source) << '\n';
  for (const Axis& a : r.plan.axes) {
    if (!r.plan.threshold_axis || a.key != *r.plan.threshold_axis) out << a.key << ',';
  }
  out << (r.plan.threshold_axis ? *r.plan.threshold_axis : std::string("threshold")) << '\n';
  for (const CurvePoint& p : r.curve) {
    for (double v : p.other) out << fmt(v) << ',';
    out << (p.value ? fmt(*p.value) : std::string("none")) << '\n';
  }
}

}  // namespace csbm
