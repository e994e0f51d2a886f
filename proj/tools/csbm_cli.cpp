// csbm: generate, cluster and evaluate node-attributed SBM data, compute
// recovery thresholds and run seeded experiment sweeps.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure, 1 anything else.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "csbm/cluster.hpp"
#include "csbm/config.hpp"
#include "csbm/dataset_io.hpp"
#include "csbm/errors.hpp"
#include "csbm/eval.hpp"
#include "csbm/experiment.hpp"
#include "csbm/info.hpp"
#include "csbm/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace csbm;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned workers = 0;
  std::string out;
};

unsigned worker_count(const Globals& g) {
  if (g.workers > 0) return g.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
}

std::optional<Family> family_option(const std::string& name) {
  if (name.empty() || name == "none" || name == "binary") return std::nullopt;
  return parse_family_name(name);
}

/// Scaled divergence in the limit n -> infinity for binary networks with
/// Gaussian (or no) attributes, reading the spec as alpha log(n)/n rates and
/// means proportional to sqrt(log n).
std::optional<double> asymptotic_scaled(const CsbmSpec& spec) {
  if (spec.weight_family) return std::nullopt;
  if (spec.attr_family && spec.attr_family->kind() != FamilyKind::Gaussian) return std::nullopt;
  const double n = static_cast<double>(spec.n);
  const double log_n = std::log(n);
  if (log_n <= 0.0) return std::nullopt;
  const Eigen::MatrixXd alpha = spec.edge_prob * (n / log_n);
  std::vector<Vec> mu(static_cast<std::size_t>(spec.K), Vec{0.0});
  double sigma = 1.0;
  if (spec.attr_family) {
    sigma = std::sqrt(spec.attr_family->variance());
    for (int a = 0; a < spec.K; ++a) {
      Vec m = grad_psi(*spec.attr_family, spec.attr_eta[static_cast<std::size_t>(a)]);
      for (double& v : m) v /= std::sqrt(log_n);
      mu[static_cast<std::size_t>(a)] = std::move(m);
    }
  }
  return threshold_binary_gaussian(alpha, mu, sigma, spec.pi).value;
}

int cmd_generate(const Globals& g, const std::string& config_path, const std::string& zero_mode) {
  const json cfg = read_json_file(config_path);
  const CsbmSpec spec = parse_model_config(cfg);
  if (g.out.empty()) throw ValidationError("--out: output directory required");
  GenerateOptions opts;
  if (zero_mode == "truncated") {
    opts.zero_mode = ZeroMode::Truncated;
  } else if (zero_mode != "as_absent") {
    throw ValidationError("--zero-mode: expected as_absent or truncated");
  }
  const Dataset ds = generate(spec, g.seed.value_or(0), opts);
  save_dataset(ds, g.out);
  json meta{{"version", version_string()},
            {"config_hash", config_hash(cfg)},
            {"seed", g.seed.value_or(0)},
            {"n", ds.n()},
            {"edges", ds.num_edges()},
            {"spec", spec_to_json(spec)}};
  write_text(fs::path(g.out) / "meta.json", meta.dump(2) + "\n");
  write_labels(*ds.labels(), fs::path(g.out) / "labels.txt");
  return 0;
}

struct ClusterArgs {
  std::string edges, attributes, weight_family, attr_family, init = "spectral", method = "algorithm1";
  int K = 0;
  int max_iter = 100;
  bool strict = false;
  bool row_normalize = false;
  bool log_prior = false;
};

int cmd_cluster(const Globals& g, const ClusterArgs& a) {
  const Dataset ds = load_dataset(a.edges, a.attributes);
  if (a.K < 2) throw ValidationError("--k: must be at least 2");
  ClusterModel model;
  model.weight_family = family_option(a.weight_family);
  model.attr_family = family_option(a.attr_family);
  if (!ds.binary() && !model.weight_family) {
    throw ValidationError("--weight-family: weighted network needs a weight family");
  }
  if (model.attr_family && model.attr_family->dim() != ds.attr_dim()) {
    throw ValidationError("--attr-family: dimension " + std::to_string(model.attr_family->dim()) +
                          " does not match the attribute file (" + std::to_string(ds.attr_dim()) + ")");
  }

  RecoveryOptions opts;
  opts.method = parse_method(a.method);
  opts.seed = g.seed.value_or(0);
  opts.cluster.max_iter = a.max_iter;
  opts.cluster.strict_weight_mode = a.strict;
  opts.cluster.use_log_prior = a.log_prior;
  opts.cluster.seed = opts.seed;
  opts.embedding.row_normalize = a.row_normalize;
  if (a.init == "spectral") {
    opts.init = InitKind::Spectral;
  } else if (a.init == "random") {
    opts.init = InitKind::Random;
  } else if (a.init.rfind("file:", 0) == 0) {
    opts.init = InitKind::Given;
    opts.initial = read_labels(a.init.substr(5));
  } else {
    throw ValidationError("--init: expected spectral, random or file:<path>");
  }

  const Recovery r = recover_communities(ds, a.K, model, opts);
  json report{{"version", version_string()}, {"method", a.method}, {"init", a.init}, {"seed", opts.seed}};
  if (r.cluster) {
    report["nll_history"] = r.cluster->nll_history;
    report["sweeps"] = r.cluster->sweeps;
    report["converged"] = r.cluster->converged;
    report["flags"] = r.cluster->flags;
    report["params"] = params_to_json(r.cluster->params);
  }
  if (ds.labels()) {
    report["loss"] = loss(*ds.labels(), r.labels);
    report["ari"] = ari(*ds.labels(), r.labels);
  }
  if (g.out.empty()) {
    for (int z : r.labels) std::cout << z << '\n';
    std::cerr << report.dump(2) << '\n';
  } else {
    write_labels(r.labels, fs::path(g.out) / "labels.txt");
    write_text(fs::path(g.out) / "report.json", report.dump(2) + "\n");
  }
  return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& pred_path) {
  const Labels truth = read_labels(truth_path);
  const Labels pred = read_labels(pred_path);
  const json j{{"loss", loss(truth, pred)}, {"ari", ari(truth, pred)}, {"exact", exact_recovery(truth, pred)}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_threshold(const std::string& config_path, const std::string& curve_path) {
  const json cfg = read_json_file(config_path);
  const CsbmSpec spec = parse_model_config(cfg);
  const DivergenceReport rep = min_divergence(spec);
  json j = report_to_json(rep);
  if (const auto asym = asymptotic_scaled(spec)) j["scaled_asymptotic"] = *asym;
  j["n"] = spec.n;
  j["config_hash"] = config_hash(cfg);
  std::cout << j.dump(2) << '\n';
  if (!curve_path.empty()) {
    std::string text = provenance_line(cfg) + "\na,b,t,ch_t\n";
    for (int a = 0; a < spec.K; ++a) {
      for (int b = 0; b < spec.K; ++b) {
        if (a == b) continue;
        for (int k = 1; k < 100; ++k) {
          const double t = k / 100.0;
          text += std::to_string(a) + "," + std::to_string(b) + "," + format_double(t) + "," +
                  format_double(chernoff_t(spec, a, b, t)) + "\n";
        }
      }
    }
    write_text(curve_path, text);
  }
  return 0;
}

ExperimentPlan load_plan(const Globals& g, const std::string& plan_path) {
  json j = read_json_file(plan_path);
  if (g.seed) j["seed"] = *g.seed;
  return parse_plan(j);
}

int cmd_phase_diagram(const Globals& g, const std::string& plan_path) {
  if (g.out.empty()) throw ValidationError("--out: output directory required");
  const ExperimentPlan plan = load_plan(g, plan_path);
  const ExperimentResult r = run_experiment(plan, worker_count(g));
  write_results_csv(r, fs::path(g.out) / "phase_diagram.csv");
  if (plan.threshold_axis) write_curve_csv(r, fs::path(g.out) / "threshold_curve.csv");
  return 0;
}

int cmd_compare(const Globals& g, const std::string& plan_path) {
  if (g.out.empty()) throw ValidationError("--out: output directory required");
  const ExperimentPlan plan = load_plan(g, plan_path);
  const ExperimentResult r = run_experiment(plan, worker_count(g));
  write_results_csv(r, fs::path(g.out) / "comparison.csv");
  if (plan.axes.size() == 1) write_table_csv(r, fs::path(g.out) / "table.csv");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Node-attributed stochastic block models: generation, thresholds and recovery"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed");
  app.add_option("--workers", g.workers, "Worker threads (default: hardware concurrency)");
  app.add_option("--out", g.out, "Output directory");

  std::string config_path, zero_mode = "as_absent";
  auto* gen = app.add_subcommand("generate", "Sample a dataset from a model config");
  gen->add_option("--config", config_path, "Model config (JSON)")->required();
  gen->add_option("--zero-mode", zero_mode, "as_absent or truncated");

  ClusterArgs ca;
  auto* cl = app.add_subcommand("cluster", "Recover communities from a dataset");
  cl->add_option("--edges", ca.edges, "Edge file")->required();
  cl->add_option("--attributes", ca.attributes, "Attribute CSV");
  cl->add_option("--k", ca.K, "Number of blocks")->required();
  cl->add_option("--weight-family", ca.weight_family, "Edge weight family, e.g. poisson, gaussian:variance=1, none");
  cl->add_option("--attr-family", ca.attr_family, "Attribute family, e.g. gaussian:dim=2");
  cl->add_option("--init", ca.init, "spectral, random or file:<path>");
  cl->add_option("--method", ca.method, "algorithm1, network_only or attribute_only");
  cl->add_option("--max-iter", ca.max_iter, "Maximum sweeps");
  cl->add_flag("--strict", ca.strict, "Zero-truncate discrete weight laws in the likelihood");
  cl->add_flag("--row-normalize", ca.row_normalize, "Row-normalize the spectral embedding");
  cl->add_flag("--log-prior", ca.log_prior, "Add the block-size prior to node costs");

  std::string truth_path, pred_path;
  auto* ev = app.add_subcommand("evaluate", "Compare two label files");
  ev->add_option("truth", truth_path, "Ground-truth labels")->required();
  ev->add_option("predicted", pred_path, "Predicted labels")->required();

  std::string curve_path;
  auto* th = app.add_subcommand("threshold", "Chernoff-Hellinger divergence and recovery verdict");
  th->add_option("--config", config_path, "Model config (JSON)")->required();
  th->add_option("--curve", curve_path, "Write CH_t curves to this CSV");

  std::string plan_path;
  auto* pd = app.add_subcommand("phase-diagram", "Exact-recovery rate over a parameter grid");
  pd->add_option("--plan", plan_path, "Experiment plan (JSON)")->required();
  auto* cmp = app.add_subcommand("compare", "ARI of several methods over a parameter sweep");
  cmp->add_option("--plan", plan_path, "Experiment plan (JSON)")->required();

  for (auto* sub : {gen, cl, ev, th, pd, cmp}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*gen) return cmd_generate(g, config_path, zero_mode);
    if (*cl) return cmd_cluster(g, ca);
    if (*ev) return cmd_evaluate(truth_path, pred_path);
    if (*th) return cmd_threshold(config_path, curve_path);
    if (*pd) return cmd_phase_diagram(g, plan_path);
    if (*cmp) return cmd_compare(g, plan_path);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
