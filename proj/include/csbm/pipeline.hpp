#pragma once

// End-to-end community recovery on a dataset.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csbm/cluster.hpp"
#include "csbm/init.hpp"

namespace csbm {

enum class Method {
  /// Spectral initialization on network and attributes, then Bregman hard clustering.
  Algorithm1,
  /// Laplacian eigenvectors and k-means; attributes ignored.
  NetworkOnly,
  /// Gram eigenvectors and k-means, then Bregman hard clustering without edge terms.
  AttributeOnly,
};

std::string to_string(Method m);
Method parse_method(const std::string& name);

enum class InitKind { Spectral, Random, Given };

struct RecoveryOptions {
  Method method = Method::Algorithm1;
  InitKind init = InitKind::Spectral;
  /// Starting labels for InitKind::Given.
  std::optional<Labels> initial;
  std::uint64_t seed = 0;
  ClusterConfig cluster;
  EmbeddingOptions embedding;
};

struct Recovery {
  Labels labels;
  Labels initial;
  /// Present when the method runs Bregman hard clustering.
  std::optional<ClusterResult> cluster;
};

Recovery recover_communities(const Dataset& ds, int K, const ClusterModel& model, const RecoveryOptions& options);

}  // namespace csbm
