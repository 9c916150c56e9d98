#pragma once

// Synthetic spiked covariance models with sparse leading eigenvectors and
// seeded Gaussian sampling.
//
// Random streams come from std::mt19937_64 feeding std::normal_distribution
// (libstdc++). Monte-Carlo trials use seed_base + trial_index as their data
// seed.

#include <cstdint>
#include <vector>

#include "ospca/matrix.hpp"

namespace ospca {

struct SupportSpec {
  Index column = 0;
  std::vector<Index> rows;  // nonzero pattern of that column
};

struct CovModel {
  Matrix v;        // m x m orthogonal
  Vector lambda;   // descending, positive
  std::vector<SupportSpec> sparse_support;

  Index dim() const noexcept { return v.rows(); }
  SymmetricMatrix sigma() const;
};

/// Two leading eigenvectors with value 1/sqrt(10) on rows 0..9 and 10..19,
/// eigenvalues (400, 300, 1, ..., 1). Requires m >= 20.
CovModel make_recovery_model(Index m, std::uint64_t seed);

/// k leading eigenvectors supported on rows 0..9 (random orthonormal within
/// the support), eigenvalues 100 (k - i + 1) for i <= k and 1 otherwise.
/// Requires m >= 10 and 1 <= k <= 10.
CovModel make_angle_model(Index m, Index k, std::uint64_t seed);

/// Completes the leading columns of `v` (m x k, orthonormal) to an m x m
/// orthogonal matrix without modifying them.
Matrix orthonormal_completion(const Matrix& leading, std::uint64_t seed);

/// n i.i.d. rows drawn from N(0, Sigma) as z diag(sqrt(lambda)) V^T.
DataMatrix sample(const CovModel& model, Index n, std::uint64_t seed);

}  // namespace ospca
