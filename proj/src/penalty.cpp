#include "ospca/penalty.hpp"

#include <cmath>
#include <string>

namespace ospca {

namespace {

void check_rho(const Eigen::Ref<const Matrix>& u, const PenaltyParams& params) {
  if (static_cast<Index>(params.rho.size()) != u.cols()) {
    throw DimensionError("rho has " + std::to_string(params.rho.size()) +
                         " entries but the frame has " +
                         std::to_string(u.cols()) + " columns");
  }
}

}  // namespace

void PenaltyParams::validate() const {
  if (!(p > 0.0 && p <= 1.0)) {
    throw ParameterError("p must lie in (0, 1], got " + std::to_string(p));
  }
  if (!(eps > 0.0 && eps < 1.0)) {
    throw ParameterError("eps must lie in (0, 1), got " + std::to_string(eps));
  }
  if (!(threshold >= 0.0)) {
    throw ParameterError("threshold must be nonnegative");
  }
  for (double r : rho) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw ParameterError("rho entries must be finite and nonnegative");
    }
  }
}

double gp(double x, double p) {
  return std::log1p(std::abs(x) / p) / std::log1p(1.0 / p);
}

double gp_eps(double x, double p, double eps) {
  const double ax = std::abs(x);
  const double denom = std::log1p(1.0 / p);
  if (ax <= eps) return x * x / (2.0 * eps * (p + eps) * denom);
  return (std::log((p + ax) / (p + eps)) + eps / (2.0 * (p + eps))) / denom;
}

WeightPack weights(const Eigen::Ref<const Matrix>& u0,
                   const PenaltyParams& params) {
  check_rho(u0, params);
  const Index m = u0.rows();
  const Index q = u0.cols();
  const double log_term = std::log1p(1.0 / params.p);
  const double core = 2.0 * params.eps * (params.p + params.eps) * log_term;

  WeightPack pack;
  pack.w.resize(m, q);
  pack.w_max.resize(q);
  for (Index j = 0; j < q; ++j) {
    const double rho = params.rho[static_cast<std::size_t>(j)];
    for (Index i = 0; i < m; ++i) {
      const double a = std::abs(u0(i, j));
      pack.w(i, j) = a <= params.eps ? rho / core
                                     : rho / (2.0 * log_term * a * (a + params.p));
    }
    pack.w_max(j) = m > 0 ? pack.w.col(j).maxCoeff() : 0.0;
  }
  pack.h = (pack.w.rowwise() - pack.w_max.transpose()).cwiseProduct(u0);
  pack.c = penalty_value(u0, params) - 2.0 * pack.h.cwiseProduct(u0).sum();
  return pack;
}

double penalty_value(const Eigen::Ref<const Matrix>& u,
                     const PenaltyParams& params) {
  check_rho(u, params);
  double total = 0.0;
  for (Index j = 0; j < u.cols(); ++j) {
    const double rho = params.rho[static_cast<std::size_t>(j)];
    if (rho == 0.0) continue;
    double col = 0.0;
    for (Index i = 0; i < u.rows(); ++i) col += gp_eps(u(i, j), params.p, params.eps);
    total += rho * col;
  }
  return total;
}

double penalty_surrogate_value(const Eigen::Ref<const Matrix>& u,
                               const Eigen::Ref<const Matrix>& u0,
                               const PenaltyParams& params) {
  if (u.rows() != u0.rows() || u.cols() != u0.cols()) {
    throw DimensionError("surrogate frames differ in shape");
  }
  const WeightPack pack = weights(u0, params);
  return 2.0 * pack.h.cwiseProduct(u).sum() + pack.c;
}

}  // namespace ospca
