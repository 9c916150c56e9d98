#include "ospca/matrix.hpp"

#include <cmath>
#include <string>

namespace ospca {

namespace {

// Flip columns of `primary` (and the matching columns of `secondary`) so the
// largest-magnitude entry of each primary column is nonnegative.
void canonicalize_signs(Matrix& primary, Matrix* secondary) {
  for (Index j = 0; j < primary.cols(); ++j) {
    Index arg = 0;
    double best = -1.0;
    for (Index i = 0; i < primary.rows(); ++i) {
      const double a = std::abs(primary(i, j));
      if (a > best) {
        best = a;
        arg = i;
      }
    }
    if (primary(arg, j) < 0.0) {
      primary.col(j) = -primary.col(j);
      if (secondary != nullptr) secondary->col(j) = -secondary->col(j);
    }
  }
}

}  // namespace

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
  if (!m.allFinite()) {
    throw InputError(std::string(what) + " contains non-finite entries");
  }
}

SymmetricMatrix::SymmetricMatrix(const Matrix& entries) {
  if (entries.rows() != entries.cols()) {
    throw DimensionError("symmetric matrix must be square, got " +
                         std::to_string(entries.rows()) + "x" +
                         std::to_string(entries.cols()));
  }
  if (entries.rows() == 0) throw DimensionError("symmetric matrix is empty");
  require_finite(entries, "symmetric matrix");
  entries_ = 0.5 * (entries + entries.transpose());
}

SymmetricMatrix SymmetricMatrix::identity(Index m) {
  return SymmetricMatrix(Matrix::Identity(m, m));
}

DataMatrix::DataMatrix(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.cols() < 1) {
    throw DimensionError("data matrix needs at least one row and one column");
  }
  require_finite(entries_, "data matrix");
}

SymmetricMatrix sample_covariance(const DataMatrix& data, CovarianceMode mode,
                                  bool center) {
  Matrix a = data.matrix();
  if (center) a.rowwise() -= a.colwise().mean();
  Matrix gram = a.transpose() * a;
  if (mode == CovarianceMode::kMeanNormalized) {
    gram /= static_cast<double>(data.samples());
  }
  return SymmetricMatrix(gram);
}

SymmetricMatrix shrink(const SymmetricMatrix& s, double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw ParameterError("shrinkage delta must lie in (0, 1], got " +
                         std::to_string(delta));
  }
  Matrix out = (1.0 - delta) * s.matrix();
  out.diagonal().array() += delta;
  return SymmetricMatrix(out);
}

SvdFactors thin_svd(const Eigen::Ref<const Matrix>& y) {
  if (y.cols() < 1 || y.rows() < y.cols()) {
    throw DimensionError("thin_svd expects m >= q >= 1, got " +
                         std::to_string(y.rows()) + "x" +
                         std::to_string(y.cols()));
  }
  require_finite(y, "thin_svd input");
  Eigen::BDCSVD<Matrix> svd(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdFactors f{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  canonicalize_signs(f.left, &f.right);
  return f;
}

EigenPairs sym_eig(const SymmetricMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s.matrix());
  if (eig.info() != Eigen::Success) {
    throw InputError("symmetric eigendecomposition did not converge");
  }
  EigenPairs out{eig.eigenvalues().reverse(),
                 eig.eigenvectors().rowwise().reverse()};
  canonicalize_signs(out.vectors, nullptr);
  return out;
}

double max_eigenvalue(const SymmetricMatrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s.matrix(),
                                            Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw InputError("symmetric eigendecomposition did not converge");
  }
  return eig.eigenvalues()(eig.eigenvalues().size() - 1);
}

double orthogonality_error(const Eigen::Ref<const Matrix>& u) {
  const Matrix gram = u.transpose() * u;
  return (gram - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

}  // namespace ospca
