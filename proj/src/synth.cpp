#include "ospca/synth.hpp"

#include <cmath>
#include <random>
#include <string>

namespace ospca {

namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) g(i, j) = normal(rng);
  return g;
}

std::vector<Index> range(Index first, Index last) {
  std::vector<Index> out;
  for (Index i = first; i < last; ++i) out.push_back(i);
  return out;
}

}  // namespace

SymmetricMatrix CovModel::sigma() const {
  return SymmetricMatrix(v * lambda.asDiagonal() * v.transpose());
}

Matrix orthonormal_completion(const Matrix& leading, std::uint64_t seed) {
  const Index m = leading.rows();
  const Index k = leading.cols();
  std::mt19937_64 rng(seed);
  Matrix stacked(m, m);
  stacked.leftCols(k) = leading;
  stacked.rightCols(m - k) = gaussian(m, m - k, rng);
  // The first k Householder directions span the leading columns, so the
  // remaining columns of Q are orthogonal to them.
  Eigen::HouseholderQR<Matrix> qr(stacked);
  Matrix q = qr.householderQ();
  Matrix out(m, m);
  out.leftCols(k) = leading;
  out.rightCols(m - k) = q.rightCols(m - k);
  return out;
}

CovModel make_recovery_model(Index m, std::uint64_t seed) {
  if (m < 20) throw ParameterError("recovery model needs m >= 20");
  Matrix leading = Matrix::Zero(m, 2);
  const double value = 1.0 / std::sqrt(10.0);
  leading.block(0, 0, 10, 1).setConstant(value);
  leading.block(10, 1, 10, 1).setConstant(value);
  CovModel model;
  model.v = orthonormal_completion(leading, seed);
  model.lambda = Vector::Ones(m);
  model.lambda(0) = 400.0;
  model.lambda(1) = 300.0;
  model.sparse_support = {{0, range(0, 10)}, {1, range(10, 20)}};
  return model;
}

CovModel make_angle_model(Index m, Index k, std::uint64_t seed) {
  if (m < 10) throw ParameterError("angle model needs m >= 10");
  if (k < 1 || k > 10) throw ParameterError("angle model needs 1 <= k <= 10");
  std::mt19937_64 rng(seed);
  Eigen::HouseholderQR<Matrix> qr(gaussian(10, k, rng));
  const Matrix block = qr.householderQ() * Matrix::Identity(10, k);
  Matrix leading = Matrix::Zero(m, k);
  leading.topRows(10) = block;
  CovModel model;
  model.v = orthonormal_completion(leading, rng());
  model.lambda = Vector::Ones(m);
  for (Index i = 0; i < k; ++i) model.lambda(i) = 100.0 * static_cast<double>(k - i);
  for (Index j = 0; j < k; ++j) model.sparse_support.push_back({j, range(0, 10)});
  return model;
}

DataMatrix sample(const CovModel& model, Index n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("sample count must be positive");
  std::mt19937_64 rng(seed);
  const Matrix z = gaussian(n, model.dim(), rng);
  return DataMatrix(z * model.lambda.cwiseSqrt().asDiagonal() * model.v.transpose());
}

}  // namespace ospca
