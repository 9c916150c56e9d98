#pragma once

// Smoothed log-based cardinality surrogate and its linear majorizer on the
// Stiefel manifold.
//
// For a frame U (m x q) the penalty is sum_j rho_j sum_i g(u_ij) with g the
// smoothed function gp_eps below. At a reference frame U0 the penalty is
// majorized on {U : U^T U = I} by the affine function 2 Tr(H^T U) + c, which
// touches it at U = U0. All solvers in this library linearize their sparsity
// term through `weights`.

#include <vector>

#include "ospca/matrix.hpp"

namespace ospca {

struct PenaltyParams {
  std::vector<double> rho;  // one weight per penalized column, >= 0
  double p = 0.1;           // curvature of the log surrogate, 0 < p <= 1
  double eps = 1e-6;        // width of the quadratic core, 0 < eps < 1
  double threshold = 1e-12; // hard threshold applied to final loadings

  void validate() const;
};

/// log(1 + |x|/p) / log(1 + 1/p).
double gp(double x, double p);

/// Smoothed gp: quadratic for |x| <= eps, shifted log outside; C^1 at eps.
double gp_eps(double x, double p, double eps);

/// Everything needed to evaluate the majorizer at a reference frame U0.
/// `w` is stored as an m x q matrix whose column-major data is vec(w).
struct WeightPack {
  Matrix w;       // per-entry quadratic weights
  Vector w_max;   // per-column maximum of w
  Matrix h;       // (w - w_max broadcast) .* U0, entries have sign opposite to U0
  double c = 0.0; // penalty_value(U0) - 2 Tr(H^T U0)
};

/// Throws DimensionError if rho.size() != u0.cols().
WeightPack weights(const Eigen::Ref<const Matrix>& u0,
                   const PenaltyParams& params);

double penalty_value(const Eigen::Ref<const Matrix>& u,
                     const PenaltyParams& params);

/// 2 Tr(H^T U) + c with (H, c) built at u0.
double penalty_surrogate_value(const Eigen::Ref<const Matrix>& u,
                               const Eigen::Ref<const Matrix>& u0,
                               const PenaltyParams& params);

}  // namespace ospca
