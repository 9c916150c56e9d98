#pragma once

// Sparse orthogonal eigenvector extraction.
//
// Maximizes Tr(U^T S U D) - sum_j rho_j sum_i g(u_ij) over m x q frames with
// orthonormal columns. Each iteration linearizes both terms at the current
// frame (a tangent minorizer) and maximizes the resulting linear function
// Tr((G - H)^T U) in closed form with a Procrustes step, G = S U D. The
// objective is therefore nondecreasing and every iterate stays orthonormal.

#include <cstdint>
#include <optional>
#include <vector>

#include "ospca/matrix.hpp"
#include "ospca/penalty.hpp"
#include "ospca/procrustes.hpp"

namespace ospca {

enum class InitKind { kLeadingEigs, kRandomStiefel, kGiven };

struct ImrpConfig {
  Index q = 1;
  Vector d;                // column weights, strictly descending, positive
  PenaltyParams penalty;   // rho has q entries
  double tol = 1e-7;       // relative objective change
  int max_iter = 1000;
  InitKind init = InitKind::kLeadingEigs;
  std::optional<Matrix> initial_frame;  // used with InitKind::kGiven
  std::uint64_t seed = 0;               // used with InitKind::kRandomStiefel

  /// d_i = (q - i + 1) / q, rho = 0.
  static ImrpConfig defaults(Index q);
  void validate(Index m) const;
};

struct ImrpTrace {
  std::vector<double> objective;  // objective[0] is the initial frame
  int iterations = 0;
  bool converged = false;
};

struct ImrpResult {
  StiefelFrame frame;  // before hard thresholding
  ImrpTrace trace;
};

double imrp_objective(const StiefelFrame& u, const SymmetricMatrix& s,
                      const ImrpConfig& cfg);

/// Value of the tangent minorizer built at `uk`, evaluated at `u`.
double imrp_surrogate(const StiefelFrame& u, const StiefelFrame& uk,
                      const SymmetricMatrix& s, const ImrpConfig& cfg);

/// One minorize-maximize update.
StiefelFrame imrp_step(const StiefelFrame& u, const SymmetricMatrix& s,
                       const ImrpConfig& cfg);

StiefelFrame initial_frame(const SymmetricMatrix& s, Index q, InitKind init,
                           const std::optional<Matrix>& given,
                           std::uint64_t seed);

ImrpResult imrp(const SymmetricMatrix& s, const ImrpConfig& cfg);

/// Zeroes entries with |u_ij| <= t. Columns are not renormalized.
Matrix hard_threshold(const Eigen::Ref<const Matrix>& u, double t);

}  // namespace ospca
