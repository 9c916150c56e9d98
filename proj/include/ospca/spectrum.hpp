#pragma once

// Exact solvers for the ordered-eigenvalue subproblems of the covariance
// estimators.
//
// Both subproblems minimize a separable convex function of a positive
// vector x subject to the "chain plus fan" order
//
//     x_1 <= x_2 <= ... <= x_q   and   x_q <= x_c  for every c > q.
//
//   kLambda:  sum_i  -log x_i + z_i x_i                 (x = precision eigenvalues)
//   kPhi:     sum_i  -log x_i + alpha_i / x_i + L x_i   (L = largest eigenvalue of S)
//
// In both cases the minimizer over a block of tied coordinates depends only on
// the arithmetic mean of the block's parameters, so the solution is found by
// pooling adjacent violators of the parameter order and mapping each pooled
// mean through the per-coordinate closed form. Pooling proceeds in rounds:
// every maximal violating run along the chain is averaged in parallel, and
// tail coordinates that violate the q-th constraint are absorbed into the
// q-th block through an active-set test on running averages. At most m - 1
// rounds are needed.
//
// Indices in this API are zero based; `q` is a count (1 <= q <= m), so the
// pivot coordinate is q - 1.

#include <span>
#include <vector>

#include "ospca/matrix.hpp"

namespace ospca {

enum class SpectrumKind { kLambda, kPhi };

/// Positive vector satisfying the chain-plus-fan order exactly.
class OrderedSpectrum {
 public:
  OrderedSpectrum() = default;
  /// Throws FeasibilityError listing the violated constraints, or
  /// DegenerateInputError if an entry is not strictly positive.
  OrderedSpectrum(Vector values, Index q);

  const Vector& values() const noexcept { return values_; }
  Index q() const noexcept { return q_; }
  Index size() const noexcept { return values_.size(); }

 private:
  Vector values_;
  Index q_ = 0;
};

/// Constraint violations of `values` under the order with pivot q, as pairs
/// (i, j) meaning values[i] > values[j] + tol * max(|values[i]|, |values[j]|).
std::vector<std::pair<Index, Index>> ordering_violations(const Vector& values,
                                                         Index q,
                                                         double tol = 0.0);

/// Final pooled partition. `pooled` holds, for every coordinate, the mean of
/// the original parameters over its block.
struct PoolingState {
  std::vector<double> params;
  std::vector<std::vector<Index>> blocks;
  std::vector<double> pooled;
};

struct SpectrumSolution {
  OrderedSpectrum spectrum;
  PoolingState pooling;
  int rounds = 0;
  /// Objective of the closed-form iterate before the first round and after
  /// each round, evaluated with the original parameters. Nondecreasing: every
  /// round adds equality constraints, and it ends at the constrained optimum.
  std::vector<double> round_objectives;
};

/// Minimizes sum(-log l_i + z_i l_i) under the order. Requires z > 0.
SpectrumSolution solve_lambda(const Vector& z, Index q);

/// Minimizes sum(-log f_i + alpha_i / f_i + lam_max f_i) under the order.
/// Requires lam_max > 0 and alpha >= 0.
SpectrumSolution solve_phi(const Vector& alpha, double lam_max, Index q);

/// Tail coordinates that join the pivot block in one pooling round.
///
/// `run_length` is r: the pivot block spans [q-1-r, q-1]. `violators` are tail
/// coordinates whose parameter violates the pivot constraint. They are sorted
/// from mildest to strongest violation (stable in index), and the largest
/// suffix whose members each pass the running-average test is returned,
/// sorted by index.
std::vector<Index> active_set(const Vector& params, Index q, Index run_length,
                              std::span<const Index> violators,
                              SpectrumKind kind);

/// Objective value of `values` for the given parameters.
double spectrum_objective(const Vector& values, const Vector& params,
                          SpectrumKind kind, double lam_max = 0.0);

/// KKT certificate residual of a feasible point: reconstructs the chain and
/// fan multipliers from stationarity and reports the largest of the pivot
/// stationarity error, negative multiplier magnitudes and complementary
/// slackness products. Zero at the exact optimum.
double kkt_residual(const OrderedSpectrum& spectrum, const Vector& params,
                    SpectrumKind kind, double lam_max = 0.0);

/// As above for a raw vector; throws FeasibilityError if it violates the order.
double kkt_residual(const Vector& values, Index q, const Vector& params,
                    SpectrumKind kind, double lam_max = 0.0);

/// Per-coordinate unconstrained minimizer of the phi objective:
/// (1 + sqrt(1 + 4 lam_max alpha)) / (2 lam_max).
double phi_closed_form(double alpha, double lam_max);

}  // namespace ospca
