#pragma once

// JSON model configuration.
//
//   {
//     "n": 500, "K": 2, "pi": [0.5, 0.5],
//     "alpha_in": 9, "alpha_out": 1,          // p_ab = alpha_ab log(n) / n
//     "attr_family": {"kind": "gaussian", "params": {"variance": 1, "dim": 2}},
//     "attr_radius": 1.5, "attr_scale": "sqrt_log_n"
//   }
//
// Edge rates: exactly one of "edge_prob" (K x K), "alpha" (K x K, scaled),
// "p_in"/"p_out" or "alpha_in"/"alpha_out" (homogeneous).
// Weights: "weight_family" (omit or null for a binary network) with one of
// "weight_theta", "weight_mean" (K x K) or "weight_mean_in"/"weight_mean_out".
// Attributes: "attr_family" (omit for none) with one of "attr_eta",
// "attr_mean" (K rows) or "attr_radius" (means on a regular K-gon in the first
// two coordinates). "attr_scale" multiplies attr_mean/attr_radius means by
// 1, sqrt(log n) or log n ("none", "sqrt_log_n", "log_n").

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "csbm/model.hpp"

namespace csbm {

CsbmSpec parse_model_config(const nlohmann::json& j);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Canonical JSON form of a spec (natural parameters, absolute rates).
nlohmann::json spec_to_json(const CsbmSpec& spec);

/// FNV-1a hash of the canonical dump, hex encoded.
std::string config_hash(const nlohmann::json& j);

}  // namespace csbm
