#pragma once

// Initial labelings for Bregman hard clustering.
//
// The spectral initializer stacks the K bottom eigenvectors of the symmetric
// normalized Laplacian of the presence graph next to the K top eigenvectors of
// the attribute Gram matrix Y Y^T, then runs k-means on the rows.

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "csbm/model.hpp"

namespace csbm {

/// I - D^{-1/2} A D^{-1/2} on the presence graph (weights ignored). Isolated
/// nodes get an identity row.
Eigen::SparseMatrix<double> normalized_laplacian(const Dataset& ds);
Eigen::SparseMatrix<double> normalized_laplacian(std::size_t n, const std::vector<Edge>& edges);

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // unit columns
};

/// The `count` smallest eigenpairs of a symmetric sparse matrix. Dense solver
/// up to `dense_limit` rows, Lanczos with full reorthogonalization above.
/// Throws NumericError if Lanczos leaves a residual above `tol`.
SymmetricEigen smallest_eigenpairs(const Eigen::SparseMatrix<double>& M, int count, std::size_t dense_limit = 4000,
                                   double tol = 1e-8);

/// Lanczos path of smallest_eigenpairs, exposed for testing on small inputs.
SymmetricEigen lanczos_smallest(const Eigen::SparseMatrix<double>& M, int count, double tol = 1e-8);

struct Embedding {
  /// n x 2K. Columns 0..K-1 are Laplacian eigenvectors (ascending eigenvalue),
  /// columns K..2K-1 Gram eigenvectors (descending eigenvalue).
  Eigen::MatrixXd W;
  Eigen::VectorXd laplacian_values;
  Eigen::VectorXd gram_values;
  /// Number of attribute columns with a nonzero Gram eigenvalue. Columns past
  /// it are an arbitrary orthonormal completion.
  int gram_rank = 0;
  bool degenerate = false;
  double max_residual = 0.0;
};

struct EmbeddingOptions {
  bool row_normalize = false;
  std::size_t dense_limit = 4000;
};

/// Requires n >= 2K. Each column has unit norm and its first nonzero entry is
/// positive.
Embedding spectral_embedding(const Dataset& ds, int K, const EmbeddingOptions& options = {});

struct KMeansResult {
  Labels labels;
  Eigen::MatrixXd centers;  // K x p
  double inertia = 0.0;
};

/// Lloyd iterations from k-means++ seeding; best of `restarts` runs by
/// within-cluster sum of squares.
KMeansResult kmeans(const Eigen::MatrixXd& points, int K, std::uint64_t seed, int restarts = 10,
                    int max_iter = 300);

/// Uniform labels conditioned on every block being nonempty. Requires n >= K.
Labels random_init(std::size_t n, int K, std::uint64_t seed);

enum class EmbeddingPart { Both, Network, Attributes };

/// k-means (10 restarts) on the selected columns of the spectral embedding.
/// Attribute columns past the Gram rank are left out.
Labels spectral_init(const Dataset& ds, int K, std::uint64_t seed, EmbeddingPart part = EmbeddingPart::Both,
                     const EmbeddingOptions& options = {});

}  // namespace csbm
