#include "ospca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

namespace ospca {

Matrix pairwise_angles(const Eigen::Ref<const Matrix>& u) {
  const Index q = u.cols();
  Vector norms = u.colwise().norm().transpose();
  for (Index j = 0; j < q; ++j) {
    if (!(norms(j) > 0.0)) {
      throw DegenerateInputError(fmt::format("column {} is zero", j));
    }
  }
  Matrix out = Matrix::Zero(q, q);
  for (Index i = 0; i < q; ++i) {
    for (Index j = i + 1; j < q; ++j) {
      const double c = std::clamp(u.col(i).dot(u.col(j)) / (norms(i) * norms(j)), -1.0, 1.0);
      const double deg = std::acos(c) * 180.0 / std::numbers::pi;
      out(i, j) = out(j, i) = std::min(std::abs(deg), 180.0 - std::abs(deg));
    }
  }
  return out;
}

double min_offdiag_angle(const Eigen::Ref<const Matrix>& u) {
  if (u.cols() < 2) throw ParameterError("minimum angle needs at least two columns");
  const Matrix angles = pairwise_angles(u);
  double best = 90.0;
  for (Index i = 0; i < angles.rows(); ++i)
    for (Index j = i + 1; j < angles.cols(); ++j) best = std::min(best, angles(i, j));
  return best;
}

std::vector<double> recovery_overlaps(const Eigen::Ref<const Matrix>& u,
                                      const Eigen::Ref<const Matrix>& v_true) {
  if (u.rows() != v_true.rows()) throw DimensionError("frames differ in row count");
  const Index targets = std::min<Index>(2, v_true.cols());
  Matrix overlap = (u.transpose() * v_true.leftCols(targets)).cwiseAbs();
  std::vector<double> out(static_cast<std::size_t>(targets), 0.0);
  std::vector<bool> row_used(static_cast<std::size_t>(u.cols()), false);
  std::vector<bool> col_used(static_cast<std::size_t>(targets), false);
  for (Index step = 0; step < std::min(targets, u.cols()); ++step) {
    double best = -1.0;
    Index bi = 0, bj = 0;
    for (Index i = 0; i < overlap.rows(); ++i) {
      if (row_used[i]) continue;
      for (Index j = 0; j < overlap.cols(); ++j) {
        if (col_used[j]) continue;
        if (overlap(i, j) > best) {
          best = overlap(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    row_used[bi] = true;
    col_used[bj] = true;
    out[static_cast<std::size_t>(bj)] = best;
  }
  return out;
}

bool exact_recovery(const Eigen::Ref<const Matrix>& u,
                    const Eigen::Ref<const Matrix>& v_true) {
  if (u.cols() < 2 || v_true.cols() < 2) {
    throw DimensionError("exact recovery compares two columns");
  }
  const std::vector<double> ov = recovery_overlaps(u, v_true);
  return ov[0] > 0.99 && ov[1] > 0.99;
}

double cpev_from_gram(const SymmetricMatrix& gram, const Eigen::Ref<const Matrix>& u) {
  if (u.rows() != gram.dim()) throw DimensionError("loadings and data disagree");
  const Matrix utu = u.transpose() * u;
  Eigen::LDLT<Matrix> ldlt(utu);
  const double scale = utu.diagonal().cwiseAbs().maxCoeff();
  const Vector d = ldlt.vectorD();
  if (ldlt.info() != Eigen::Success || !(scale > 0.0) ||
      d.cwiseAbs().minCoeff() <= 1e-12 * scale) {
    throw DegenerateInputError("U^T U is singular; loadings are linearly dependent");
  }
  // Tr(P S) with P = U (U^T U)^{-1} U^T.
  const Matrix su = gram.matrix() * u;
  const Matrix solved = ldlt.solve(u.transpose() * su);
  return solved.trace() / gram.trace();
}

double cpev(const DataMatrix& a, const Eigen::Ref<const Matrix>& u) {
  if (u.rows() != a.variables()) throw DimensionError("loadings and data disagree");
  return cpev_from_gram(sample_covariance(a, CovarianceMode::kScaledGram), u);
}

double adjusted_variance(const DataMatrix& a, const Eigen::Ref<const Matrix>& u,
                         AdjustedVarianceMode mode) {
  if (u.rows() != a.variables()) throw DimensionError("loadings and data disagree");
  const Matrix au = a.matrix() * u;
  if (au.rows() < au.cols()) throw DegenerateInputError("A U cannot have full column rank");
  Eigen::ColPivHouseholderQR<Matrix> rank_check(au);
  if (rank_check.rank() < au.cols()) throw DegenerateInputError("A U is rank deficient");
  Eigen::HouseholderQR<Matrix> qr(au);
  const Matrix r = qr.matrixQR().topRows(au.cols()).triangularView<Eigen::Upper>();
  if (mode == AdjustedVarianceMode::kTraceOfSquare) return (r * r).trace();
  return (r.transpose() * r).trace();
}

std::vector<double> cpev_monotone(std::vector<double> values) {
  for (std::size_t i = 1; i < values.size(); ++i) {
    values[i] = std::max(values[i], values[i - 1]);
  }
  return values;
}

double rel_mse(const SymmetricMatrix& s_hat, const SymmetricMatrix& s_ref,
               const SymmetricMatrix& sigma) {
  if (s_hat.dim() != sigma.dim() || s_ref.dim() != sigma.dim()) {
    throw DimensionError("rel_mse operands differ in dimension");
  }
  const double ref = (s_ref.matrix() - sigma.matrix()).squaredNorm();
  if (!(ref > 0.0)) throw DegenerateInputError("reference estimator has zero error");
  return 1.0 - (s_hat.matrix() - sigma.matrix()).squaredNorm() / ref;
}

Matrix simple_thresholding_baseline(const SymmetricMatrix& gram, Index q,
                                    Index cardinality) {
  const Index m = gram.dim();
  if (q < 1 || q > m) throw ParameterError("q must lie in [1, m]");
  if (cardinality < 1 || cardinality > m) {
    throw ParameterError("cardinality must lie in [1, m]");
  }
  Matrix u = sym_eig(gram).vectors.leftCols(q);
  std::vector<Index> order(static_cast<std::size_t>(m));
  for (Index j = 0; j < q; ++j) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return std::abs(u(a, j)) > std::abs(u(b, j));
    });
    for (std::size_t k = static_cast<std::size_t>(cardinality); k < order.size(); ++k) {
      u(order[k], j) = 0.0;
    }
  }
  return u;
}

Matrix simple_thresholding_baseline(const DataMatrix& a, Index q, Index cardinality) {
  return simple_thresholding_baseline(sample_covariance(a, CovarianceMode::kScaledGram),
                                      q, cardinality);
}

std::vector<Index> column_cardinality(const Eigen::Ref<const Matrix>& u) {
  std::vector<Index> out;
  for (Index j = 0; j < u.cols(); ++j) out.push_back((u.col(j).array() != 0.0).count());
  return out;
}

}  // namespace ospca
