#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "wadc/measurements.hpp"

namespace wadc {

/// Gaussian-similarity blocks for the Nystrom approximation. The full n x n
/// similarity is never formed: a_block holds landmark-landmark entries and
/// b_block landmark-rest entries, in the permuted order [landmarks; rest].
struct SimilarityFactors {
  Eigen::MatrixXd a_block;  // l x l, symmetric, unit diagonal
  Eigen::MatrixXd b_block;  // l x (n - l)
  double sigma = 1.0;
  int l = 0;
  int n = 0;
  std::vector<int> perm;  // perm[i] = original data index of permuted row i
};

struct SimilarityOptions {
  double sigma = 0.0;                  // <= 0 selects the median heuristic
  bool squared_distance = false;       // exponent ||d||^2/(2 sigma^2) instead of ||d||/(2 sigma^2)
  std::vector<int> landmark_override;  // 0-based data indices; empty = seeded sampling
};

/// Row-normalized spectral embedding of the approximated normalized Laplacian.
struct SpectralEmbedding {
  Eigen::MatrixXd u_rows;       // n x j, rows unit-norm (zero rows flagged), original order
  Eigen::VectorXd eigenvalues;  // j smallest Laplacian eigenvalues, ascending
  Eigen::VectorXd degree;       // length-n row sums of the approximated similarity
  std::vector<int> zero_rows;   // rows whose eigenvector entries were all ~0
  int suggested_k = 1;          // largest-eigengap suggestion; reported, never applied
};

struct CoherencyGrouping {
  std::vector<int> assignment;  // machine index (0-based) -> group id in 1..k
  int k = 0;
  Eigen::MatrixXd centers;  // k x j final k-means centers
  double inertia = 0.0;
  double elapsed = 0.0;  // seconds, filled by group_machines
  bool empty_cluster = false;
  // Provenance recorded for the grouping report.
  Eigen::VectorXd eigenvalues;
  double sigma = 0.0;
  int l = 0;
  std::uint64_t seed = 0;
  int suggested_k = 1;

  /// group id -> 1-based machine ids, ascending.
  std::map<int, std::vector<MachineId>> groups() const;
};

struct GroupingParams {
  int l = 0;         // landmark count; 0 means all points
  double sigma = 0.0;  // <= 0 selects the median heuristic
  bool squared_distance = false;
  std::uint64_t seed = 0;
  std::vector<int> landmark_override;
};

/// Similarity S_ij = exp(-||x_i - x_j|| / (2 sigma^2)) over the window's
/// machine columns, reduced to Nystrom blocks for l seeded landmarks.
SimilarityFactors similarity_factors(const MeasurementWindow& window, int l,
                                     std::uint64_t seed, const SimilarityOptions& opts = {});

/// Row sums of the Nystrom-completed similarity without materializing the
/// (n-l) x (n-l) block: top = A 1 + B 1, bottom = B' 1 + B' A^{-1} (B 1).
/// Returned in the permuted order of the factors.
Eigen::VectorXd approximate_row_sums(const SimilarityFactors& f);

/// One-shot orthogonalized Nystrom eigendecomposition of
/// L = I - D^{-1/2} S D^{-1/2}; keeps the j smallest-eigenvalue eigenvectors,
/// sign-canonicalized and row-normalized, rows mapped back to original order.
SpectralEmbedding laplacian_embedding(const SimilarityFactors& f,
                                      const Eigen::VectorXd& degree_permuted, int j);

/// Lloyd iteration with k-means++ seeding; ties to the lowest center index;
/// group labels canonicalized by first occurrence in machine order.
CoherencyGrouping kmeans_cluster(const SpectralEmbedding& embedding, int k,
                                 std::uint64_t seed);

/// similarity_factors -> approximate_row_sums -> laplacian_embedding(j = k)
/// -> kmeans_cluster, with elapsed time and provenance recorded.
CoherencyGrouping group_machines(const MeasurementWindow& window, int k,
                                 const GroupingParams& params = {});

}  // namespace wadc
