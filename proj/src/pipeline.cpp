#include "csbm/pipeline.hpp"

#include "csbm/errors.hpp"

namespace csbm {

std::string to_string(Method m) {
  switch (m) {
    case Method::Algorithm1: return "algorithm1";
    case Method::NetworkOnly: return "network_only";
    case Method::AttributeOnly: return "attribute_only";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "algorithm1") return Method::Algorithm1;
  if (name == "network_only") return Method::NetworkOnly;
  if (name == "attribute_only") return Method::AttributeOnly;
  throw ValidationError("unknown method '" + name + "' (expected algorithm1, network_only or attribute_only)");
}

Recovery recover_communities(const Dataset& ds, int K, const ClusterModel& model, const RecoveryOptions& options) {
  Recovery out;
  const std::uint64_t init_seed = derive_seed(options.seed, {stream::kInit});
  EmbeddingPart part = EmbeddingPart::Both;
  if (options.method == Method::NetworkOnly) part = EmbeddingPart::Network;
  if (options.method == Method::AttributeOnly) part = EmbeddingPart::Attributes;

  switch (options.init) {
    case InitKind::Spectral:
      out.initial = spectral_init(ds, K, init_seed, part, options.embedding);
      break;
    case InitKind::Random:
      out.initial = random_init(ds.n(), K, init_seed);
      break;
    case InitKind::Given:
      if (!options.initial) throw ValidationError("init: no initial labels given");
      out.initial = *options.initial;
      break;
  }

  if (options.method == Method::NetworkOnly) {
    out.labels = out.initial;
    return out;
  }
  ClusterConfig config = options.cluster;
  if (options.method == Method::AttributeOnly) config.use_edges = false;
  out.cluster = iterate(ds, out.initial, K, model, config);
  out.labels = out.cluster->labels;
  return out;
}

}  // namespace csbm
