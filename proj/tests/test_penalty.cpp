#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ospca/penalty.hpp"
#include "support.hpp"

namespace ospca {
namespace {

PenaltyParams params_with(std::vector<double> rho, double p = 0.1, double eps = 0.01) {
  PenaltyParams pp;
  pp.rho = std::move(rho);
  pp.p = p;
  pp.eps = eps;
  return pp;
}

TEST(Gp, Examples) {
  EXPECT_EQ(gp(0.0, 0.1), 0.0);
  for (double p : {0.01, 0.1, 0.5, 1.0}) {
    EXPECT_NEAR(gp(1.0, p), 1.0, 1e-15);
    EXPECT_NEAR(gp(-1.0, p), 1.0, 1e-15);
  }
  EXPECT_NEAR(gp(0.5, 0.5), std::log(2.0) / std::log(3.0), 1e-15);
  EXPECT_NEAR(gp(0.5, 0.5), 0.63093, 1e-5);
}

TEST(Gp, EvenAndIncreasing) {
  double prev = 0.0;
  for (double x = 0.01; x < 3.0; x += 0.01) {
    EXPECT_EQ(gp(x, 0.2), gp(-x, 0.2));
    EXPECT_GT(gp(x, 0.2), prev);
    prev = gp(x, 0.2);
  }
}

TEST(GpEps, BranchesMeetAtEps) {
  EXPECT_EQ(gp_eps(0.0, 0.1, 0.01), 0.0);
  const double expected = 0.01 / (2.0 * 0.11 * std::log(11.0));
  EXPECT_NEAR(expected, 0.018956018, 1e-9);
  EXPECT_NEAR(gp_eps(0.01, 0.1, 0.01), expected, 1e-15);
  EXPECT_NEAR(gp_eps(-0.01, 0.1, 0.01), expected, 1e-15);
  // Values just inside and outside the core are continuous.
  EXPECT_NEAR(gp_eps(0.01 * (1 - 1e-12), 0.1, 0.01),
              gp_eps(0.01 * (1 + 1e-12), 0.1, 0.01), 1e-12);
}

TEST(GpEps, DerivativesMatchAtEps) {
  for (double p : {0.05, 0.1, 1.0}) {
    for (double eps : {1e-3, 1e-2, 0.1}) {
      const double h = 1e-7 * eps;
      const double left = (gp_eps(eps, p, eps) - gp_eps(eps - h, p, eps)) / h;
      const double right = (gp_eps(eps + h, p, eps) - gp_eps(eps, p, eps)) / h;
      const double analytic = 1.0 / (std::log(1.0 + 1.0 / p) * (p + eps));
      EXPECT_NEAR(left, analytic, 1e-5 * analytic);
      EXPECT_NEAR(right, analytic, 1e-5 * analytic);
    }
  }
}

TEST(GpEps, ConvergesToGpAsEpsShrinks) {
  EXPECT_LT(std::abs(gp_eps(0.3, 0.1, 1e-8) - gp(0.3, 0.1)), 1e-6);
  EXPECT_EQ(gp_eps(0.7, 0.3, 0.01), gp_eps(-0.7, 0.3, 0.01));
}

TEST(PenaltyParams, Validation) {
  EXPECT_NO_THROW(params_with({1.0}).validate());
  EXPECT_THROW(params_with({1.0}, 0.0).validate(), ParameterError);
  EXPECT_THROW(params_with({1.0}, 1.5).validate(), ParameterError);
  EXPECT_THROW(params_with({1.0}, 0.1, 0.0).validate(), ParameterError);
  EXPECT_THROW(params_with({1.0}, 0.1, 1.0).validate(), ParameterError);
  EXPECT_THROW(params_with({-1.0}).validate(), ParameterError);
}

TEST(Weights, ZeroRhoGivesZeroPack) {
  std::mt19937_64 rng(2);
  const Matrix u0 = testing::random_stiefel(6, 2, rng);
  const WeightPack w = weights(u0, params_with({0.0, 0.0}));
  EXPECT_EQ(w.w.norm(), 0.0);
  EXPECT_EQ(w.h.norm(), 0.0);
  EXPECT_EQ(w.c, 0.0);
}

TEST(Weights, LogBranchExample) {
  Matrix u0(1, 1);
  u0 << 0.5;
  const WeightPack w = weights(u0, params_with({1.0}));
  EXPECT_NEAR(w.w(0, 0), 1.0 / (2.0 * std::log(11.0) * 0.5 * 0.6), 1e-15);
  EXPECT_NEAR(w.w(0, 0), 0.69506, 1e-5);
}

TEST(Weights, QuadraticBranchCap) {
  Matrix u0(2, 1);
  u0 << 0.0, 1e-4;
  const WeightPack w = weights(u0, params_with({2.0}));
  const double cap = 2.0 / (2.0 * 0.01 * 0.11 * std::log(11.0));
  EXPECT_NEAR(w.w(0, 0), cap, 1e-12 * cap);
  EXPECT_NEAR(w.w(1, 0), cap, 1e-12 * cap);
  EXPECT_NEAR(w.w_max(0), cap, 1e-12 * cap);
}

TEST(Weights, StructureOnRandomFrames) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const Matrix u0 = testing::sparse_stiefel(10, 3, rng);
    const WeightPack w = weights(u0, params_with({0.5, 1.0, 2.0}));
    for (Index j = 0; j < 3; ++j) {
      EXPECT_EQ(w.w_max(j), w.w.col(j).maxCoeff());
      for (Index i = 0; i < 10; ++i) {
        EXPECT_GE(w.w(i, j), 0.0);
        EXPECT_LE(w.w(i, j) - w.w_max(j), 0.0);
        EXPECT_DOUBLE_EQ(w.h(i, j), (w.w(i, j) - w.w_max(j)) * u0(i, j));
        if (u0(i, j) != 0.0 && w.h(i, j) != 0.0) {
          EXPECT_NE(std::signbit(w.h(i, j)), std::signbit(u0(i, j)));
        }
      }
    }
  }
}

TEST(Weights, RhoLengthMismatch) {
  EXPECT_THROW(weights(Matrix::Identity(3, 2), params_with({1.0})), DimensionError);
  EXPECT_THROW(penalty_value(Matrix::Identity(3, 2), params_with({1.0})), DimensionError);
}

TEST(PenaltyValue, Examples) {
  EXPECT_EQ(penalty_value(Matrix::Zero(4, 2), params_with({1.0, 3.0})), 0.0);
  Matrix e1 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  EXPECT_NEAR(penalty_value(e1, params_with({1.0})), gp_eps(1.0, 0.1, 0.01), 1e-15);
}

TEST(PenaltyValue, MatchesNaiveLoop) {
  std::mt19937_64 rng(8);
  const Matrix u = testing::gaussian(7, 3, rng);
  const PenaltyParams pp = params_with({0.3, 1.1, 2.0}, 0.2, 0.05);
  double naive = 0.0;
  for (Index j = 0; j < 3; ++j)
    for (Index i = 0; i < 7; ++i) naive += pp.rho[j] * gp_eps(u(i, j), pp.p, pp.eps);
  EXPECT_NEAR(penalty_value(u, pp), naive, 1e-12 * naive);
}

TEST(Surrogate, TangentAndMajorizes) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    const Index m = 3 + rep % 10;
    const Index q = 1 + rep % 3;
    std::vector<double> rho(static_cast<std::size_t>(q));
    std::uniform_real_distribution<double> uni(0.0, 3.0);
    for (double& r : rho) r = uni(rng);
    const PenaltyParams pp = params_with(rho, 0.1, 1e-3);
    const Matrix u0 = rep % 2 ? testing::sparse_stiefel(m, q, rng)
                              : testing::random_stiefel(m, q, rng);
    const Matrix u = testing::random_stiefel(m, q, rng);
    const double at_u0 = penalty_value(u0, pp);
    const WeightPack w = weights(u0, pp);
    const double scale = std::max({1.0, std::abs(at_u0),
                                   2.0 * std::abs(w.h.cwiseProduct(u0).sum())});
    EXPECT_NEAR(penalty_surrogate_value(u0, u0, pp), at_u0, 1e-12 * scale);
    EXPECT_GE(penalty_surrogate_value(u, u0, pp), penalty_value(u, pp) - 1e-9);
  }
}

TEST(Surrogate, ZeroRhoIsZero) {
  std::mt19937_64 rng(13);
  const Matrix u0 = testing::random_stiefel(5, 2, rng);
  const Matrix u = testing::random_stiefel(5, 2, rng);
  EXPECT_EQ(penalty_surrogate_value(u, u0, params_with({0.0, 0.0})), 0.0);
}

}  // namespace
}  // namespace ospca
