#pragma once

// Agreement between a labeling and the ground truth, up to relabeling.

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "csbm/model.hpp"

namespace csbm {

/// N(a, b) = |{i : z_i = a, z_hat_i = b}|, padded to a square matrix of side
/// max(max z, max z_hat) + 1.
Eigen::MatrixXi confusion_matrix(const Labels& z, const Labels& z_hat);

/// Permutation maximizing the trace of a square weight matrix: row a is
/// matched to column assignment[a]. O(K^3).
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights);

/// Minimum Hamming distance between z and a relabeling of z_hat.
std::size_t loss(const Labels& z, const Labels& z_hat);

/// Adjusted Rand index. Requires n >= 2.
double ari(const Labels& z, const Labels& z_hat);

bool exact_recovery(const Labels& z, const Labels& z_hat);

}  // namespace csbm
