#include "ospca/imrp.hpp"

#include <cmath>
#include <random>
#include <string>

namespace ospca {

ImrpConfig ImrpConfig::defaults(Index q) {
  ImrpConfig cfg;
  cfg.q = q;
  cfg.d.resize(q);
  for (Index i = 0; i < q; ++i) {
    cfg.d(i) = static_cast<double>(q - i) / static_cast<double>(q);
  }
  cfg.penalty.rho.assign(static_cast<std::size_t>(q), 0.0);
  return cfg;
}

void ImrpConfig::validate(Index m) const {
  if (q < 1 || q > m) {
    throw ParameterError("q must lie in [1, " + std::to_string(m) + "]");
  }
  if (d.size() != q) throw DimensionError("D must have q entries");
  for (Index i = 0; i < q; ++i) {
    if (!(d(i) > 0.0)) throw ParameterError("D entries must be positive");
    if (i > 0 && !(d(i) < d(i - 1))) {
      throw ParameterError("D entries must be strictly descending");
    }
  }
  if (static_cast<Index>(penalty.rho.size()) != q) {
    throw DimensionError("rho must have q entries");
  }
  penalty.validate();
  if (!(tol >= 0.0)) throw ParameterError("tol must be nonnegative");
  if (max_iter < 1) throw ParameterError("max_iter must be positive");
  if (init == InitKind::kGiven && !initial_frame) {
    throw ParameterError("init = given requires an initial frame");
  }
}

double imrp_objective(const StiefelFrame& u, const SymmetricMatrix& s,
                      const ImrpConfig& cfg) {
  const Matrix& um = u.matrix();
  if (um.rows() != s.dim() || um.cols() != cfg.d.size()) {
    throw DimensionError("frame, covariance and D disagree in shape");
  }
  const Matrix su = s.matrix() * um;
  double quad = 0.0;
  for (Index j = 0; j < um.cols(); ++j) quad += cfg.d(j) * um.col(j).dot(su.col(j));
  return quad - penalty_value(um, cfg.penalty);
}

double imrp_surrogate(const StiefelFrame& u, const StiefelFrame& uk,
                      const SymmetricMatrix& s, const ImrpConfig& cfg) {
  const Matrix& x = u.matrix();
  const Matrix& x0 = uk.matrix();
  const Matrix g = s.matrix() * x0 * cfg.d.asDiagonal();
  // Tangent plane of the convex quadratic: 2 Tr(G^T U) - Tr(U0^T S U0 D).
  const double quad = 2.0 * g.cwiseProduct(x).sum() - g.cwiseProduct(x0).sum();
  return quad - penalty_surrogate_value(x, x0, cfg.penalty);
}

StiefelFrame imrp_step(const StiefelFrame& u, const SymmetricMatrix& s,
                       const ImrpConfig& cfg) {
  const Matrix& um = u.matrix();
  const WeightPack pack = weights(um, cfg.penalty);
  const Matrix g = s.matrix() * um * cfg.d.asDiagonal();
  return stiefel_trace_max(g - pack.h);
}

StiefelFrame initial_frame(const SymmetricMatrix& s, Index q, InitKind init,
                           const std::optional<Matrix>& given,
                           std::uint64_t seed) {
  switch (init) {
    case InitKind::kLeadingEigs:
      return StiefelFrame(sym_eig(s).vectors.leftCols(q));
    case InitKind::kRandomStiefel: {
      std::mt19937_64 rng(seed);
      return StiefelFrame::random(s.dim(), q, rng);
    }
    case InitKind::kGiven:
      if (!given) throw ParameterError("no initial frame supplied");
      if (given->rows() != s.dim() || given->cols() != q) {
        throw DimensionError("initial frame has the wrong shape");
      }
      return StiefelFrame(*given);
  }
  throw ParameterError("unknown initialization");
}

ImrpResult imrp(const SymmetricMatrix& s, const ImrpConfig& cfg) {
  cfg.validate(s.dim());
  ImrpResult out{initial_frame(s, cfg.q, cfg.init, cfg.initial_frame, cfg.seed), {}};
  double f = imrp_objective(out.frame, s, cfg);
  out.trace.objective.push_back(f);
  for (int k = 0; k < cfg.max_iter; ++k) {
    out.frame = imrp_step(out.frame, s, cfg);
    const double next = imrp_objective(out.frame, s, cfg);
    out.trace.objective.push_back(next);
    ++out.trace.iterations;
    const bool done = std::abs(next - f) <= cfg.tol * std::max(1.0, std::abs(f));
    f = next;
    if (done) {
      out.trace.converged = true;
      break;
    }
  }
  return out;
}

Matrix hard_threshold(const Eigen::Ref<const Matrix>& u, double t) {
  if (!(t >= 0.0)) throw ParameterError("threshold must be nonnegative");
  return (u.array().abs() <= t).select(0.0, u);
}

}  // namespace ospca
