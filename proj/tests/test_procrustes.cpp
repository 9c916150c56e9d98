#include <gtest/gtest.h>

#include <random>

#include "ospca/procrustes.hpp"
#include "support.hpp"

namespace ospca {
namespace {

double trace_inner(const Matrix& y, const Matrix& x) { return y.cwiseProduct(x).sum(); }

TEST(StiefelFrame, ValidatesOrthonormality) {
  EXPECT_NO_THROW(StiefelFrame(Matrix::Identity(4, 2)));
  EXPECT_THROW(StiefelFrame(2.0 * Matrix::Identity(4, 2)), FeasibilityError);
  EXPECT_THROW(StiefelFrame(Matrix::Identity(2, 3)), DimensionError);
  std::mt19937_64 rng(1);
  const StiefelFrame r = StiefelFrame::random(7, 3, rng);
  EXPECT_LE(orthogonality_error(r.matrix()), 1e-12);
}

TEST(TraceMax, OrthonormalInputIsFixed) {
  std::mt19937_64 rng(2);
  const Matrix y = testing::random_stiefel(6, 3, rng);
  const StiefelFrame x = stiefel_trace_max(y);
  EXPECT_LE((x.matrix() - y).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(trace_inner(y, x.matrix()), 3.0, 1e-12);
}

TEST(TraceMax, ColumnNormalization) {
  Matrix y(3, 2);
  y << 2, 0, 0, 3, 0, 0;
  const StiefelFrame x = stiefel_trace_max(y);
  EXPECT_LE((x.matrix() - Matrix::Identity(3, 2)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_NEAR(trace_inner(y, x.matrix()), 5.0, 1e-14);
}

TEST(TraceMin, NegatesMaximizer) {
  std::mt19937_64 rng(3);
  const Matrix y = testing::random_stiefel(5, 2, rng);
  EXPECT_LE((stiefel_trace_min(y).matrix() + y).cwiseAbs().maxCoeff(), 1e-10);
  Matrix d(3, 2);
  d << 2, 0, 0, 3, 0, 0;
  EXPECT_LE((stiefel_trace_min(d).matrix() + Matrix::Identity(3, 2)).cwiseAbs().maxCoeff(),
            1e-14);
}

TEST(TraceMax, AttainsNuclearNormAndDominatesSamples) {
  std::mt19937_64 rng(4);
  const Matrix y = testing::gaussian(8, 3, rng);
  const Matrix best = stiefel_trace_max(y).matrix();
  const Matrix worst = stiefel_trace_min(y).matrix();
  const double top = trace_inner(y, best);
  const double bottom = trace_inner(y, worst);
  const double nuclear = thin_svd(y).singular.sum();
  EXPECT_NEAR(top, nuclear, 1e-8 * nuclear);
  EXPECT_NEAR(bottom, -nuclear, 1e-8 * nuclear);
  const double best_dist = (best - y).squaredNorm();
  for (int k = 0; k < 10000; ++k) {
    const Matrix x = testing::random_stiefel(8, 3, rng);
    EXPECT_LE(trace_inner(y, x), top + 1e-12);
    EXPECT_GE(trace_inner(y, x), bottom - 1e-12);
    // Nearest point in Frobenius norm is the same frame.
    EXPECT_GE((x - y).squaredNorm(), best_dist - 1e-10);
  }
}

TEST(TraceMax, RankDeficientInputStillOptimal) {
  Matrix y = Matrix::Zero(5, 3);
  y(0, 0) = 1.0;
  y(1, 0) = 1.0;
  const StiefelFrame x = stiefel_trace_max(y);
  EXPECT_LE(orthogonality_error(x.matrix()), 1e-12);
  EXPECT_NEAR(trace_inner(y, x.matrix()), std::sqrt(2.0), 1e-12);
}

TEST(TraceMax, OutputAlwaysOnManifold) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 100; ++rep) {
    const Index m = 2 + rep % 12;
    const Index q = 1 + rep % m;
    Matrix y = testing::gaussian(m, q, rng);
    y *= std::pow(10.0, (rep % 9) - 4);
    EXPECT_LE(orthogonality_error(stiefel_trace_max(y).matrix()), 1e-12);
  }
}

}  // namespace
}  // namespace ospca
