#pragma once

// Helpers shared by the unit tests and the acceptance runner: random
// instances and an exhaustive oracle for the ordered-spectrum problems.

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ospca/matrix.hpp"
#include "ospca/procrustes.hpp"
#include "ospca/spectrum.hpp"

namespace ospca::testing {

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = nd(rng);
  return m;
}

/// A^T A / n + ridge I for a Gaussian n x m matrix A.
inline SymmetricMatrix random_spd(Index m, std::mt19937_64& rng, Index n = 0,
                                  double ridge = 0.1) {
  if (n == 0) n = 2 * m;
  const Matrix a = gaussian(n, m, rng);
  Matrix s = a.transpose() * a / static_cast<double>(n);
  s.diagonal().array() += ridge;
  return SymmetricMatrix(s);
}

inline Matrix random_stiefel(Index m, Index q, std::mt19937_64& rng) {
  return StiefelFrame::random(m, q, rng).matrix();
}

/// Frame with a few exact zeros and some tiny entries, closer to what the
/// solvers see once sparsity sets in.
inline Matrix sparse_stiefel(Index m, Index q, std::mt19937_64& rng) {
  Matrix g = gaussian(m, q, rng);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (Index j = 0; j < q; ++j)
    for (Index i = 0; i < m; ++i) {
      const double r = uni(rng);
      if (r < 0.3) g(i, j) *= 1e-7;
      else if (r < 0.4) g(i, j) = 0.0;
    }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q_full = qr.householderQ() * Matrix::Identity(m, q);
  return q_full;
}

inline double closed_form(double mean, SpectrumKind kind, double lam_max) {
  if (kind == SpectrumKind::kLambda) return 1.0 / mean;
  return (1.0 + std::sqrt(1.0 + 4.0 * lam_max * mean)) / (2.0 * lam_max);
}

inline double objective(const Vector& x, const Vector& params, SpectrumKind kind,
                        double lam_max) {
  double f = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    f += -std::log(x(i));
    f += kind == SpectrumKind::kLambda ? params(i) * x(i)
                                       : params(i) / x(i) + lam_max * x(i);
  }
  return f;
}

struct OracleResult {
  Vector values;
  double objective = std::numeric_limits<double>::infinity();
};

/// Enumerates every partition compatible with the order (consecutive chain
/// blocks, the pivot block optionally absorbing any subset of the tail,
/// remaining tail coordinates alone), maps block means through the
/// closed-form minimizer and keeps the feasible candidate of least objective.
inline OracleResult brute_force_spectrum(const Vector& params, Index q,
                                         SpectrumKind kind, double lam_max = 0.0) {
  const Index m = params.size();
  const Index tail = m - q;
  OracleResult best;
  const unsigned chain_cuts = q > 1 ? (1u << (q - 1)) : 1u;
  const unsigned tail_sets = 1u << tail;
  for (unsigned cuts = 0; cuts < chain_cuts; ++cuts) {
    for (unsigned absorbed = 0; absorbed < tail_sets; ++absorbed) {
      Vector x(m);
      Index start = 0;
      for (Index i = 0; i < q; ++i) {
        const bool block_ends = i == q - 1 || (cuts >> i) & 1u;
        if (!block_ends) continue;
        std::vector<Index> members;
        for (Index j = start; j <= i; ++j) members.push_back(j);
        if (i == q - 1) {
          for (Index t = 0; t < tail; ++t)
            if ((absorbed >> t) & 1u) members.push_back(q + t);
        }
        double mean = 0.0;
        for (Index j : members) mean += params(j);
        mean /= static_cast<double>(members.size());
        for (Index j : members) x(j) = closed_form(mean, kind, lam_max);
        start = i + 1;
      }
      for (Index t = 0; t < tail; ++t)
        if (!((absorbed >> t) & 1u)) x(q + t) = closed_form(params(q + t), kind, lam_max);

      bool feasible = true;
      for (Index i = 0; i + 1 < q; ++i)
        if (x(i) > x(i + 1) * (1.0 + 1e-12)) feasible = false;
      for (Index c = q; c < m; ++c)
        if (x(q - 1) > x(c) * (1.0 + 1e-12)) feasible = false;
      if (!feasible) continue;
      const double f = objective(x, params, kind, lam_max);
      if (f < best.objective) {
        best.objective = f;
        best.values = x;
      }
    }
  }
  return best;
}

}  // namespace ospca::testing
