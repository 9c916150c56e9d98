#pragma once

// Covariance estimation with sparse leading eigenvectors.
//
// The precision matrix is parameterized as Psi = U diag(lambda) U^T with U
// square orthogonal, and the penalized Gaussian negative log-likelihood
//
//     -sum log lambda_i + Tr(S U diag(lambda) U^T) + sum_{j<q} rho_j sum_i g(u_ij)
//
// is minimized subject to lambda_1 <= ... <= lambda_q <= lambda_c (c > q), so
// the q penalized columns stay the q leading covariance directions.
//
// AOCE alternates an exact ordered-spectrum step with a majorize-minimize
// Procrustes step on U. JOCE works with xi = 1/lambda and majorizes jointly
// in (U, xi) after subtracting the largest eigenvalue of S, which decouples
// the two blocks. Both produce nonincreasing objective traces.

#include <cstdint>
#include <optional>
#include <vector>

#include "ospca/imrp.hpp"
#include "ospca/matrix.hpp"
#include "ospca/penalty.hpp"
#include "ospca/procrustes.hpp"
#include "ospca/spectrum.hpp"

namespace ospca {

struct CovEstConfig {
  Index q = 1;
  std::vector<double> rho;  // q entries; padded with zeros up to m internally
  double p = 0.1;
  double eps = 1e-6;
  double threshold = 1e-12;
  double tol = 1e-7;
  int max_iter = 500;
  std::optional<double> delta;  // shrink S toward I before estimating
  InitKind init = InitKind::kLeadingEigs;
  std::optional<Matrix> initial_frame;
  std::uint64_t seed = 0;

  void validate(Index m) const;
  /// Penalty over all m columns, rho padded with zeros.
  PenaltyParams extended_penalty(Index m) const;
};

struct CovEstimate {
  StiefelFrame u;                  // m x m
  OrderedSpectrum precision;       // lambda = 1/xi, ordered
  Vector covariance_eigenvalues;   // 1/lambda
  SymmetricMatrix sigma_hat;       // U diag(1/lambda) U^T
};

struct CovEstTrace {
  std::vector<double> objective;
  int iterations = 0;
  bool converged = false;
  double lam_max = 0.0;  // shifted largest eigenvalue used by the majorizers
};

struct CovEstResult {
  CovEstimate estimate;
  CovEstTrace trace;
};

/// Applies the optional shrinkage and checks positive definiteness. Throws
/// DegenerateInputError when the smallest eigenvalue is below
/// 1e-10 times the largest.
SymmetricMatrix prepare_covariance(const SymmetricMatrix& s,
                                   std::optional<double> delta);

/// Largest eigenvalue of S inflated by a relative 1e-9, so that
/// S - lam_max I is negative definite under round-off.
double shifted_max_eigenvalue(const SymmetricMatrix& s);

double cov_objective(const StiefelFrame& u, const Vector& lambda,
                     const SymmetricMatrix& s, const CovEstConfig& cfg);

// ---- alternating scheme ---------------------------------------------------

/// Exact minimizer over lambda for fixed U: ordered solve on diag(U^T S U).
OrderedSpectrum aoce_lambda_step(const StiefelFrame& u, const SymmetricMatrix& s,
                                 Index q);

/// (S - lam_max I) U diag(lambda), the reshaped Kronecker product
/// (diag(lambda) (x) (S - lam_max I)) vec(U).
Matrix g_alt(const Eigen::Ref<const Matrix>& u, const Vector& lambda,
             const SymmetricMatrix& s, double lam_max);

/// Majorizer of U -> cov_objective(U, lambda) built at `uk`, with constants.
double aoce_u_surrogate(const StiefelFrame& u, const StiefelFrame& uk,
                        const Vector& lambda, const SymmetricMatrix& s,
                        double lam_max, const CovEstConfig& cfg);

StiefelFrame aoce_u_step(const StiefelFrame& u, const Vector& lambda,
                         const SymmetricMatrix& s, double lam_max,
                         const CovEstConfig& cfg);

/// Expects a positive definite S (see prepare_covariance); applies cfg.delta.
CovEstResult aoce(const SymmetricMatrix& s, const CovEstConfig& cfg);

// ---- joint scheme ---------------------------------------------------------

struct JointGradient {
  Matrix g_jnt;  // -Xi^{-1} U^T (S - lam_max I) U Xi^{-1}
  Vector alpha;  // diag(g_jnt), nonnegative
};

JointGradient joce_g_jnt(const Eigen::Ref<const Matrix>& u, const Vector& xi,
                         const SymmetricMatrix& s, double lam_max);

/// H + (S - lam_max I) U Xi^{-1}.
Matrix joce_h_jnt(const Eigen::Ref<const Matrix>& u, const Vector& xi,
                  const SymmetricMatrix& s, double lam_max,
                  const CovEstConfig& cfg);

StiefelFrame joce_u_step(const StiefelFrame& u, const Vector& xi,
                         const SymmetricMatrix& s, double lam_max,
                         const CovEstConfig& cfg);

/// Objective in the xi parameterization: cov_objective(U, 1/xi).
double joce_objective(const StiefelFrame& u, const Vector& xi,
                      const SymmetricMatrix& s, const CovEstConfig& cfg);

/// Upper bound on Tr(S U Xi^{-1} U^T) obtained by linearizing the jointly
/// concave part at (uk, xik).
double joce_quadratic_bound(const Eigen::Ref<const Matrix>& u, const Vector& xi,
                            const Eigen::Ref<const Matrix>& uk,
                            const Vector& xik, const SymmetricMatrix& s,
                            double lam_max);

/// Full joint majorizer of joce_objective built at (uk, xik).
double joce_surrogate(const StiefelFrame& u, const Vector& xi,
                      const StiefelFrame& uk, const Vector& xik,
                      const SymmetricMatrix& s, double lam_max,
                      const CovEstConfig& cfg);

CovEstResult joce(const SymmetricMatrix& s, const CovEstConfig& cfg);

}  // namespace ospca
