#pragma once

// Evaluation quantities for sparse loadings and covariance estimates, and the
// simple-thresholding baseline.

#include <vector>

#include "ospca/matrix.hpp"

namespace ospca {

/// q x q matrix of angles in degrees, theta_ij = min(acos|c|, 180 - acos|c|)
/// with c the cosine between columns i and j. Columns need not be unit norm.
Matrix pairwise_angles(const Eigen::Ref<const Matrix>& u);

/// Smallest off-diagonal pairwise angle. Requires q >= 2.
double min_offdiag_angle(const Eigen::Ref<const Matrix>& u);

/// True when the first two true eigenvectors are each matched by a column of
/// `u` with |u_i^T v_i| > 0.99. Columns are paired greedily by largest
/// absolute inner product.
bool exact_recovery(const Eigen::Ref<const Matrix>& u,
                    const Eigen::Ref<const Matrix>& v_true);

/// Absolute inner products |u_i^T v_i| after greedy matching, for the first
/// min(q, 2) true columns.
std::vector<double> recovery_overlaps(const Eigen::Ref<const Matrix>& u,
                                      const Eigen::Ref<const Matrix>& v_true);

/// Fraction of the total variance Tr(A^T A) captured by projecting the data
/// onto span(U), A_q = A U (U^T U)^{-1} U^T. Throws DegenerateInputError when
/// U^T U is singular.
double cpev(const DataMatrix& a, const Eigen::Ref<const Matrix>& u);

/// Same quantity computed from S = A^T A.
double cpev_from_gram(const SymmetricMatrix& gram, const Eigen::Ref<const Matrix>& u);

enum class AdjustedVarianceMode {
  kTraceOfSquare,  // Tr(R^2) with A U = Q R
  kFrobenius,      // Tr(R^T R) = ||A U||_F^2, no decorrelation
};

double adjusted_variance(const DataMatrix& a, const Eigen::Ref<const Matrix>& u,
                         AdjustedVarianceMode mode = AdjustedVarianceMode::kTraceOfSquare);

/// Running maximum along a cardinality-ordered curve.
std::vector<double> cpev_monotone(std::vector<double> values);

/// 1 - ||S_hat - Sigma||_F^2 / ||S_ref - Sigma||_F^2.
double rel_mse(const SymmetricMatrix& s_hat, const SymmetricMatrix& s_ref,
               const SymmetricMatrix& sigma);

/// Leading q eigenvectors of A^T A with all but the `cardinality` largest
/// |entries| of each column zeroed (ties broken by lower index).
Matrix simple_thresholding_baseline(const DataMatrix& a, Index q, Index cardinality);
Matrix simple_thresholding_baseline(const SymmetricMatrix& gram, Index q,
                                    Index cardinality);

/// Number of nonzero entries per column.
std::vector<Index> column_cardinality(const Eigen::Ref<const Matrix>& u);

}  // namespace ospca
