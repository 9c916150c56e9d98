#pragma once

// Dense linear-algebra building blocks shared by every solver: symmetric
// and data matrix wrappers, sample covariance, shrinkage toward the
// identity, a sign-canonical thin SVD and a descending symmetric
// eigendecomposition. Backed by Eigen.

#include <Eigen/Dense>

#include "ospca/errors.hpp"

namespace ospca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense real symmetric m x m matrix. Symmetry is enforced on construction
/// by averaging the input with its transpose, so s(i,j) == s(j,i) bit for bit.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(const Matrix& entries);

  static SymmetricMatrix identity(Index m);

  Index dim() const noexcept { return entries_.rows(); }
  const Matrix& matrix() const noexcept { return entries_; }
  double operator()(Index i, Index j) const { return entries_(i, j); }
  double trace() const { return entries_.trace(); }

 private:
  Matrix entries_;
};

/// n x m data matrix, one sample per row.
class DataMatrix {
 public:
  DataMatrix() = default;
  explicit DataMatrix(Matrix entries);

  Index samples() const noexcept { return entries_.rows(); }
  Index variables() const noexcept { return entries_.cols(); }
  const Matrix& matrix() const noexcept { return entries_; }

 private:
  Matrix entries_;
};

enum class CovarianceMode {
  kScaledGram,      // A^T A
  kMeanNormalized,  // (1/n) sum x_i x_i^T
};

/// Sample covariance of the rows of `data`. No centering is applied unless
/// `center` is set; the Gaussian model behind the estimators is zero mean.
SymmetricMatrix sample_covariance(const DataMatrix& data, CovarianceMode mode,
                                  bool center = false);

/// (1 - delta) S + delta I, with 0 < delta <= 1.
SymmetricMatrix shrink(const SymmetricMatrix& s, double delta);

struct SvdFactors {
  Matrix left;      // m x q, orthonormal columns
  Vector singular;  // q values, descending, nonnegative
  Matrix right;     // q x q orthogonal
};

/// Thin SVD of an m x q matrix (m >= q). Each left singular vector is
/// flipped so that its largest-magnitude entry (first index on ties) is
/// nonnegative; the matching right vector is flipped with it.
SvdFactors thin_svd(const Eigen::Ref<const Matrix>& y);

struct EigenPairs {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, same sign convention as thin_svd
};

EigenPairs sym_eig(const SymmetricMatrix& s);

/// Largest eigenvalue of `s`.
double max_eigenvalue(const SymmetricMatrix& s);

/// Max-norm of U^T U - I.
double orthogonality_error(const Eigen::Ref<const Matrix>& u);

/// Throws InputError if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, const char* what);

}  // namespace ospca
