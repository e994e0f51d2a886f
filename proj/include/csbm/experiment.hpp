#pragma once

// Seeded Monte Carlo sweeps over model configurations.
//
// A plan is JSON:
//
//   {
//     "base": { ...model config... },
//     "axes": [{"key": "alpha_in", "values": [1, 3, 5]},
//              {"key": "attr_radius", "values": [0, 0.5, 1]}],
//     "trials": 50, "seed": 1,
//     "metric": "exact_recovery" | "ari",
//     "methods": ["algorithm1", "network_only", "attribute_only"],
//     "threshold_axis": "attr_radius",
//     "cluster": {"weight_family": ..., "attr_family": ..., "max_iter": 100,
//                 "strict_weight_mode": false, "use_log_prior": false},
//     "zero_mode": "as_absent" | "truncated"
//   }
//
// Axis keys are top-level config keys or JSON pointers ("/weight_mean/0/0").
// Trial t of cell c uses seed derive_seed(seed, {kTrial, c, t}), so results
// do not depend on how trials are scheduled.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csbm/cluster.hpp"
#include "csbm/info.hpp"
#include "csbm/pipeline.hpp"

namespace csbm {

enum class Metric { ExactRecoveryRate, MeanARI };

struct Axis {
  std::string key;
  std::vector<double> values;
};

struct ExperimentPlan {
  nlohmann::json base;
  std::vector<Axis> axes;
  int trials = 0;
  std::uint64_t seed = 0;
  Metric metric = Metric::ExactRecoveryRate;
  std::vector<Method> methods{Method::Algorithm1};
  std::optional<std::string> threshold_axis;
  /// Cluster model and settings overrides; families default to the generating model's.
  nlohmann::json cluster = nlohmann::json::object();
  ZeroMode zero_mode = ZeroMode::AsAbsent;
  /// The JSON the plan was parsed from, hashed into output headers.
  nlohmann::json source;

  void validate() const;
  std::size_t num_cells() const;
  std::vector<double> cell_values(std::size_t cell) const;
  nlohmann::json cell_config(std::size_t cell) const;
};

ExperimentPlan parse_plan(const nlohmann::json& j);

struct MethodStats {
  Method method = Method::Algorithm1;
  double mean = 0.0;
  double std = 0.0;
  int trials = 0;
  int failures = 0;
  std::vector<std::string> errors;  // distinct failure messages
};

struct CellResult {
  std::vector<double> axis_values;
  std::vector<MethodStats> methods;
  double scaled_divergence = 0.0;  // n I / log n at the cell's n
  Verdict verdict = Verdict::Impossible;
};

struct CurvePoint {
  /// Values of the axes other than the threshold axis.
  std::vector<double> other;
  /// Threshold-axis value with n I / log n = 1; nullopt if the range has no crossing.
  std::optional<double> value;
};

struct ExperimentResult {
  ExperimentPlan plan;
  std::vector<CellResult> cells;
  std::vector<CurvePoint> curve;
};

/// Recovery metric for every cell and method. Worker count does not change
/// the result.
ExperimentResult run_experiment(const ExperimentPlan& plan, unsigned workers);

/// Solves n I / log n = 1 along `axis` by bisection within [lo, hi].
std::optional<double> threshold_crossing(const nlohmann::json& config, const std::string& axis, double lo, double hi,
                                         double tol = 1e-4);

ClusterModel cluster_model_for(const CsbmSpec& spec, const nlohmann::json& overrides);
ClusterConfig cluster_config_for(const nlohmann::json& overrides);

std::string version_string();
/// "# csbm version=<v> config_hash=<h>"
std::string provenance_line(const nlohmann::json& config);

/// One row per cell and method.
void write_results_csv(const ExperimentResult& r, const std::filesystem::path& path);
/// Methods as rows, cells as columns, "mean (std)" entries. Single-axis plans only.
void write_table_csv(const ExperimentResult& r, const std::filesystem::path& path);
void write_curve_csv(const ExperimentResult& r, const std::filesystem::path& path);

}  // namespace csbm
