#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "csbm/expfam.hpp"
#include "csbm/rng.hpp"

namespace csbm {

using Labels = std::vector<int>;

/// Node-attributed SBM with zero-inflated exponential-family edge weights.
///
/// An absent weight family means a binary network (the weight law is a point
/// mass at 1). An absent attribute family means nodes carry no attributes.
struct CsbmSpec {
  std::size_t n = 0;
  int K = 2;
  Vec pi;
  Eigen::MatrixXd edge_prob;  // K x K, symmetric, entries in [0, 1]
  std::optional<Family> weight_family;
  Eigen::MatrixXd weight_theta;  // K x K natural parameters, symmetric
  std::optional<Family> attr_family;
  std::vector<Vec> attr_eta;  // K natural parameter vectors

  int attr_dim() const { return attr_family ? attr_family->dim() : 0; }
  ZeroInflatedSpec edge_law(int a, int b) const;

  /// Throws ValidationError on any violated invariant.
  void validate() const;
};

struct Edge {
  std::uint32_t i = 0;
  std::uint32_t j = 0;  // i < j
  double w = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected weighted network with node attributes.
///
/// Edges are stored once as an upper-triangle coordinate list sorted by
/// (i, j), with a CSR adjacency index over both endpoints. Binary networks
/// keep no weights (X == A).
class Dataset {
 public:
  Dataset() = default;

  /// Validates and indexes. Edges may come in any order but each unordered
  /// pair must appear once with i < j, nonzero weight and no self-loop.
  Dataset(std::size_t n, std::vector<Edge> edges, Eigen::MatrixXd attributes, std::optional<Labels> labels = {},
          bool binary = false);

  std::size_t n() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  int attr_dim() const { return static_cast<int>(attributes_.cols()); }
  bool binary() const { return binary_; }

  const std::vector<Edge>& edges() const { return edges_; }
  const Eigen::MatrixXd& attributes() const { return attributes_; }
  const std::optional<Labels>& labels() const { return labels_; }

  std::span<const std::uint32_t> neighbors(std::size_t i) const {
    return {adj_.data() + offsets_[i], adj_.data() + offsets_[i + 1]};
  }
  std::span<const double> neighbor_weights(std::size_t i) const {
    return {adj_w_.data() + offsets_[i], adj_w_.data() + offsets_[i + 1]};
  }
  std::size_t degree(std::size_t i) const { return offsets_[i + 1] - offsets_[i]; }

  /// X_ij (0 when absent).
  double weight(std::size_t i, std::size_t j) const;

  // Compares content; the binary flag is a storage choice and is ignored.
  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.labels_ == b.labels_ &&
           a.attributes_.rows() == b.attributes_.rows() && a.attributes_.cols() == b.attributes_.cols() &&
           a.attributes_.cwiseEqual(b.attributes_).all();
  }

 private:
  std::size_t n_ = 0;
  bool binary_ = false;
  std::vector<Edge> edges_;
  Eigen::MatrixXd attributes_;
  std::optional<Labels> labels_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> adj_;
  std::vector<double> adj_w_;
};

/// i.i.d. categorical labels in [0, K).
Labels sample_labels(std::span<const double> pi, std::size_t n, Rng& rng);

struct GenerateOptions {
  ZeroMode zero_mode = ZeroMode::AsAbsent;
};

/// Draws labels, then one zero-inflated weight per unordered pair and one
/// attribute per node. Every row of the pair matrix and every node gets its
/// own stream derived from `seed`, so the output only depends on the seed.
Dataset generate(const CsbmSpec& spec, std::uint64_t seed, const GenerateOptions& options = {});

/// Same as generate() with externally fixed labels.
Dataset generate_with_labels(const CsbmSpec& spec, const Labels& labels, std::uint64_t seed,
                             const GenerateOptions& options = {});

}  // namespace csbm
