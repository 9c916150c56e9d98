#pragma once

// Closed-form trace maximization over the Stiefel manifold
// {X in R^{m x q} : X^T X = I_q}. The maximizer of Tr(Y^T X) is the polar
// factor L R^T of the thin SVD Y = L diag(s) R^T, attaining sum(s). It is also
// the Frobenius-nearest orthonormal frame to Y.

#include <cstdint>
#include <random>

#include "ospca/matrix.hpp"

namespace ospca {

/// m x q matrix with orthonormal columns, ||U^T U - I||_max <= 1e-8.
class StiefelFrame {
 public:
  static constexpr double kTolerance = 1e-8;

  StiefelFrame() = default;
  /// Throws FeasibilityError when the columns are not orthonormal.
  explicit StiefelFrame(Matrix u, double tolerance = kTolerance);

  static StiefelFrame identity(Index m, Index q);
  /// QR of an m x q standard Gaussian matrix.
  static StiefelFrame random(Index m, Index q, std::mt19937_64& rng);

  Index rows() const noexcept { return u_.rows(); }
  Index cols() const noexcept { return u_.cols(); }
  const Matrix& matrix() const noexcept { return u_; }

 private:
  Matrix u_;
};

/// argmax Tr(Y^T X) over the Stiefel manifold. For rank-deficient Y the
/// maximizer is not unique; the polar factor from the backend SVD is returned.
StiefelFrame stiefel_trace_max(const Eigen::Ref<const Matrix>& y);

/// argmin Tr(Y^T X), i.e. stiefel_trace_max(-Y).
StiefelFrame stiefel_trace_min(const Eigen::Ref<const Matrix>& y);

}  // namespace ospca
