#include "ospca/procrustes.hpp"

#include <string>

namespace ospca {

StiefelFrame::StiefelFrame(Matrix u, double tolerance) : u_(std::move(u)) {
  if (u_.cols() < 1 || u_.rows() < u_.cols()) {
    throw DimensionError("Stiefel frame needs m >= q >= 1");
  }
  require_finite(u_, "Stiefel frame");
  const double err = orthogonality_error(u_);
  if (!(err <= tolerance)) {
    throw FeasibilityError("frame is not orthonormal: ||U^T U - I||_max = " +
                           std::to_string(err));
  }
}

StiefelFrame StiefelFrame::identity(Index m, Index q) {
  return StiefelFrame(Matrix::Identity(m, q));
}

StiefelFrame StiefelFrame::random(Index m, Index q, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(m, q);
  for (Index j = 0; j < q; ++j)
    for (Index i = 0; i < m; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix thin = qr.householderQ() * Matrix::Identity(m, q);
  return StiefelFrame(std::move(thin));
}

StiefelFrame stiefel_trace_max(const Eigen::Ref<const Matrix>& y) {
  const SvdFactors f = thin_svd(y);
  return StiefelFrame(f.left * f.right.transpose());
}

StiefelFrame stiefel_trace_min(const Eigen::Ref<const Matrix>& y) {
  return stiefel_trace_max(-y);
}

}  // namespace ospca
