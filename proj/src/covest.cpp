#include "ospca/covest.hpp"

#include <cmath>
#include <string>

#include <fmt/format.h>

namespace ospca {

namespace {

void check_square_frame(const Eigen::Ref<const Matrix>& u, const SymmetricMatrix& s) {
  if (u.rows() != s.dim() || u.cols() != s.dim()) {
    throw DimensionError("covariance estimation needs a square m x m frame");
  }
}

void check_positive(const Vector& v, const char* name) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!(v(i) > 0.0) || !std::isfinite(v(i))) {
      throw DegenerateInputError(
          fmt::format("{}[{}] = {} must be positive", name, i, v(i)));
    }
  }
}

CovEstimate make_estimate(StiefelFrame u, OrderedSpectrum precision) {
  Vector cov = precision.values().cwiseInverse();
  const Matrix& um = u.matrix();
  SymmetricMatrix sigma(um * cov.asDiagonal() * um.transpose());
  return CovEstimate{std::move(u), std::move(precision), std::move(cov),
                     std::move(sigma)};
}

bool converged(double prev, double next, double tol) {
  return std::abs(next - prev) <= tol * std::max(1.0, std::abs(prev));
}

}  // namespace

void CovEstConfig::validate(Index m) const {
  if (q < 1 || q > m) {
    throw ParameterError("q must lie in [1, " + std::to_string(m) + "]");
  }
  if (static_cast<Index>(rho.size()) != q) {
    throw DimensionError("rho must have q entries");
  }
  extended_penalty(m).validate();
  if (!(tol >= 0.0)) throw ParameterError("tol must be nonnegative");
  if (max_iter < 1) throw ParameterError("max_iter must be positive");
  if (delta && !(*delta > 0.0 && *delta <= 1.0)) {
    throw ParameterError("delta must lie in (0, 1]");
  }
}

PenaltyParams CovEstConfig::extended_penalty(Index m) const {
  PenaltyParams pen;
  pen.rho = rho;
  pen.rho.resize(static_cast<std::size_t>(m), 0.0);
  pen.p = p;
  pen.eps = eps;
  pen.threshold = threshold;
  return pen;
}

SymmetricMatrix prepare_covariance(const SymmetricMatrix& s,
                                   std::optional<double> delta) {
  SymmetricMatrix out = delta ? shrink(s, *delta) : s;
  const Vector eig = Eigen::SelfAdjointEigenSolver<Matrix>(
                         out.matrix(), Eigen::EigenvaluesOnly)
                         .eigenvalues();
  const double hi = eig(eig.size() - 1);
  const double lo = eig(0);
  if (!(hi > 0.0) || lo < 1e-10 * hi) {
    throw DegenerateInputError(fmt::format(
        "covariance is not positive definite (smallest eigenvalue {:.3g}, "
        "largest {:.3g}); shrink it toward the identity, S_sh = (1 - delta) S "
        "+ delta I, with 0 < delta <= 1",
        lo, hi));
  }
  return out;
}

double shifted_max_eigenvalue(const SymmetricMatrix& s) {
  return max_eigenvalue(s) * (1.0 + 1e-9);
}

double cov_objective(const StiefelFrame& u, const Vector& lambda,
                     const SymmetricMatrix& s, const CovEstConfig& cfg) {
  const Matrix& um = u.matrix();
  check_square_frame(um, s);
  if (lambda.size() != s.dim()) throw DimensionError("lambda must have m entries");
  check_positive(lambda, "lambda");
  const Matrix su = s.matrix() * um;
  double value = 0.0;
  for (Index i = 0; i < lambda.size(); ++i) {
    value += -std::log(lambda(i)) + lambda(i) * um.col(i).dot(su.col(i));
  }
  return value + penalty_value(um, cfg.extended_penalty(s.dim()));
}

OrderedSpectrum aoce_lambda_step(const StiefelFrame& u, const SymmetricMatrix& s,
                                 Index q) {
  const Matrix& um = u.matrix();
  check_square_frame(um, s);
  const Vector z = (um.transpose() * s.matrix() * um).diagonal();
  return solve_lambda(z, q).spectrum;
}

Matrix g_alt(const Eigen::Ref<const Matrix>& u, const Vector& lambda,
             const SymmetricMatrix& s, double lam_max) {
  Matrix shifted = s.matrix();
  shifted.diagonal().array() -= lam_max;
  return shifted * u * lambda.asDiagonal();
}

double aoce_u_surrogate(const StiefelFrame& u, const StiefelFrame& uk,
                        const Vector& lambda, const SymmetricMatrix& s,
                        double lam_max, const CovEstConfig& cfg) {
  const Matrix& x = u.matrix();
  const Matrix& x0 = uk.matrix();
  check_square_frame(x, s);
  const Matrix g = g_alt(x0, lambda, s, lam_max);
  const double quad = 2.0 * g.cwiseProduct(x).sum() + lam_max * lambda.sum() -
                      g.cwiseProduct(x0).sum();
  const double logdet = -lambda.array().log().sum();
  return logdet + quad +
         penalty_surrogate_value(x, x0, cfg.extended_penalty(s.dim()));
}

StiefelFrame aoce_u_step(const StiefelFrame& u, const Vector& lambda,
                         const SymmetricMatrix& s, double lam_max,
                         const CovEstConfig& cfg) {
  const Matrix& um = u.matrix();
  check_square_frame(um, s);
  const WeightPack pack = weights(um, cfg.extended_penalty(s.dim()));
  return stiefel_trace_min(g_alt(um, lambda, s, lam_max) + pack.h);
}

CovEstResult aoce(const SymmetricMatrix& s_in, const CovEstConfig& cfg) {
  cfg.validate(s_in.dim());
  const SymmetricMatrix s = prepare_covariance(s_in, cfg.delta);
  const double lam_max = shifted_max_eigenvalue(s);

  StiefelFrame u = initial_frame(s, s.dim(), cfg.init, cfg.initial_frame, cfg.seed);
  OrderedSpectrum lambda = aoce_lambda_step(u, s, cfg.q);
  CovEstTrace trace;
  trace.lam_max = lam_max;
  double f = cov_objective(u, lambda.values(), s, cfg);
  trace.objective.push_back(f);
  for (int k = 0; k < cfg.max_iter; ++k) {
    u = aoce_u_step(u, lambda.values(), s, lam_max, cfg);
    lambda = aoce_lambda_step(u, s, cfg.q);
    const double next = cov_objective(u, lambda.values(), s, cfg);
    trace.objective.push_back(next);
    ++trace.iterations;
    const bool done = converged(f, next, cfg.tol);
    f = next;
    if (done) {
      trace.converged = true;
      break;
    }
  }
  return CovEstResult{make_estimate(std::move(u), std::move(lambda)), std::move(trace)};
}

JointGradient joce_g_jnt(const Eigen::Ref<const Matrix>& u, const Vector& xi,
                         const SymmetricMatrix& s, double lam_max) {
  check_square_frame(u, s);
  if (xi.size() != s.dim()) throw DimensionError("xi must have m entries");
  check_positive(xi, "xi");
  Matrix shifted = s.matrix();
  shifted.diagonal().array() -= lam_max;
  const Vector inv = xi.cwiseInverse();
  JointGradient out;
  out.g_jnt = -(inv.asDiagonal() * (u.transpose() * shifted * u) * inv.asDiagonal());
  out.g_jnt = 0.5 * (out.g_jnt + out.g_jnt.transpose()).eval();
  out.alpha = out.g_jnt.diagonal();
  return out;
}

Matrix joce_h_jnt(const Eigen::Ref<const Matrix>& u, const Vector& xi,
                  const SymmetricMatrix& s, double lam_max,
                  const CovEstConfig& cfg) {
  check_square_frame(u, s);
  const WeightPack pack = weights(u, cfg.extended_penalty(s.dim()));
  Matrix shifted = s.matrix();
  shifted.diagonal().array() -= lam_max;
  return pack.h + shifted * u * xi.cwiseInverse().asDiagonal();
}

StiefelFrame joce_u_step(const StiefelFrame& u, const Vector& xi,
                         const SymmetricMatrix& s, double lam_max,
                         const CovEstConfig& cfg) {
  check_positive(xi, "xi");
  return stiefel_trace_min(joce_h_jnt(u.matrix(), xi, s, lam_max, cfg));
}

double joce_objective(const StiefelFrame& u, const Vector& xi,
                      const SymmetricMatrix& s, const CovEstConfig& cfg) {
  check_positive(xi, "xi");
  return cov_objective(u, xi.cwiseInverse(), s, cfg);
}

double joce_quadratic_bound(const Eigen::Ref<const Matrix>& u, const Vector& xi,
                            const Eigen::Ref<const Matrix>& uk,
                            const Vector& xik, const SymmetricMatrix& s,
                            double lam_max) {
  check_positive(xi, "xi");
  Matrix shifted = s.matrix();
  shifted.diagonal().array() -= lam_max;
  const Matrix f = shifted * uk * xik.cwiseInverse().asDiagonal();
  const Vector alpha = joce_g_jnt(uk, xik, s, lam_max).alpha;
  const double c5 = -f.cwiseProduct(uk).sum() - alpha.dot(xik);
  return 2.0 * f.cwiseProduct(u).sum() + alpha.dot(xi) +
         lam_max * xi.cwiseInverse().sum() + c5;
}

double joce_surrogate(const StiefelFrame& u, const Vector& xi,
                      const StiefelFrame& uk, const Vector& xik,
                      const SymmetricMatrix& s, double lam_max,
                      const CovEstConfig& cfg) {
  const double logdet = xi.array().log().sum();
  return logdet +
         joce_quadratic_bound(u.matrix(), xi, uk.matrix(), xik, s, lam_max) +
         penalty_surrogate_value(u.matrix(), uk.matrix(),
                                 cfg.extended_penalty(s.dim()));
}

CovEstResult joce(const SymmetricMatrix& s_in, const CovEstConfig& cfg) {
  cfg.validate(s_in.dim());
  const SymmetricMatrix s = prepare_covariance(s_in, cfg.delta);
  const double lam_max = shifted_max_eigenvalue(s);

  StiefelFrame u = initial_frame(s, s.dim(), cfg.init, cfg.initial_frame, cfg.seed);
  OrderedSpectrum phi = aoce_lambda_step(u, s, cfg.q);
  Vector xi = phi.values().cwiseInverse();
  CovEstTrace trace;
  trace.lam_max = lam_max;
  double f = joce_objective(u, xi, s, cfg);
  trace.objective.push_back(f);
  for (int k = 0; k < cfg.max_iter; ++k) {
    Vector alpha = joce_g_jnt(u.matrix(), xi, s, lam_max).alpha;
    // diag of a PSD congruence; clear round-off below zero
    alpha = alpha.cwiseMax(0.0);
    StiefelFrame next_u = joce_u_step(u, xi, s, lam_max, cfg);
    phi = solve_phi(alpha, lam_max, cfg.q).spectrum;
    xi = phi.values().cwiseInverse();
    u = std::move(next_u);
    const double next = joce_objective(u, xi, s, cfg);
    trace.objective.push_back(next);
    ++trace.iterations;
    const bool done = converged(f, next, cfg.tol);
    f = next;
    if (done) {
      trace.converged = true;
      break;
    }
  }
  return CovEstResult{make_estimate(std::move(u), std::move(phi)), std::move(trace)};
}

}  // namespace ospca
