#include "omega/dkstp.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace omega {
namespace {

using testing::max_abs_diff;
using testing::Rng;

double relative_residual(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(1.0, std::max(a.norm(), b.norm()));
}

TEST(Bridge, Examples) {
  EXPECT_EQ(bridge(2, 4), projector(4, 2).matrix);
  EXPECT_EQ(bridge(5, 5), Matrix::Identity(5, 5));
  Matrix expected(2, 3);
  expected << 2.0 / 3, 1.0 / 3, 0, 0, 1.0 / 3, 2.0 / 3;
  EXPECT_LE(max_abs_diff(bridge(2, 3), expected), 1e-15);
}

TEST(Bridge, EqualsProjectorExactly) {
  for (Dim n = 1; n <= 12; ++n)
    for (Dim m = 1; m <= 12; ++m) EXPECT_EQ(bridge(n, m), projector(m, n).matrix) << n << "x" << m;
}

TEST(DkProduct, Examples) {
  Matrix a(2, 2), b(2, 2);
  a << 1, 2, 3, 4;
  b << -1, 0.5, 2, 7;
  EXPECT_EQ(dk_product(a, b), a * b);

  Matrix row(1, 2);
  row << 1, 2;
  EXPECT_NEAR(dk_product(row, Matrix::Ones(3, 1))(0, 0), 3.0, 1e-15);
  EXPECT_NEAR(dk_product(Matrix::Ones(1, 2), Matrix::Ones(3, 1))(0, 0), 2.0, 1e-15);
}

TEST(DkProduct, ShapeIsOuterDimensions) {
  const Matrix m = Matrix::Ones(4, 6);
  const Matrix n = Matrix::Ones(9, 2);
  const Matrix p = dk_product(m, n);
  EXPECT_EQ(p.rows(), 4);
  EXPECT_EQ(p.cols(), 2);
}

TEST(DkProduct, UnweightedDiffersByFactor) {
  Rng rng(3);
  const Matrix m = rng.matrix(2, 4);
  const Matrix n = rng.matrix(6, 3);
  // t = 12, weight n/t = 4/12.
  EXPECT_LE(max_abs_diff(dk_product(m, n, StpWeighting::unweighted) / 3.0, dk_product(m, n)), 1e-12);
}

TEST(DkProduct, EqualsBridgeFactorization) {
  Rng rng(29);
  for (int trial = 0; trial < 1000; ++trial) {
    const Matrix m = rng.matrix(rng.integer(1, 5), rng.integer(1, 8));
    const Matrix n = rng.matrix(rng.integer(1, 8), rng.integer(1, 5));
    EXPECT_LE(max_abs_diff(dk_product(m, n), m * bridge(m.cols(), n.rows()) * n), 1e-12);
  }
}

TEST(DkProduct, Distributivity) {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const Dim r = rng.integer(1, 5), c = rng.integer(1, 6);
    const Matrix a = rng.matrix(r, c), b = rng.matrix(r, c);
    const Matrix cm = rng.matrix(rng.integer(1, 6), rng.integer(1, 5));
    EXPECT_LE(relative_residual(dk_product(Matrix(a + b), cm), dk_product(a, cm) + dk_product(b, cm)), 1e-9);
    const Matrix left = rng.matrix(rng.integer(1, 5), rng.integer(1, 6));
    EXPECT_LE(relative_residual(dk_product(left, Matrix(a + b)), dk_product(left, a) + dk_product(left, b)), 1e-9);
  }
}

TEST(DkProduct, Associativity) {
  Rng rng(37);
  for (int trial = 0; trial < 1000; ++trial) {
    const Matrix a = rng.matrix(rng.integer(1, 6), rng.integer(1, 6));
    const Matrix b = rng.matrix(rng.integer(1, 6), rng.integer(1, 6));
    const Matrix c = rng.matrix(rng.integer(1, 6), rng.integer(1, 6));
    EXPECT_LE(relative_residual(dk_product(dk_product(a, b), c), dk_product(a, dk_product(b, c))), 1e-9);
  }
}

TEST(DkProduct, RingOnFixedShapeClass) {
  // One shape class ℳ_{3×5} per run: closed under ⋉, identity-free but associative and distributive.
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix a = rng.matrix(3, 5), b = rng.matrix(3, 5), c = rng.matrix(3, 5);
    const Matrix ab = dk_product(a, b);
    EXPECT_EQ(ab.rows(), 3);
    EXPECT_EQ(ab.cols(), 5);
    EXPECT_LE(relative_residual(dk_product(ab, c), dk_product(a, dk_product(b, c))), 1e-9);
    EXPECT_LE(relative_residual(dk_product(a, Matrix(b + c)), ab + dk_product(a, c)), 1e-9);
  }
}

TEST(OpVnorm, Examples) {
  EXPECT_NEAR(op_vnorm(Matrix::Identity(4, 4)), 1.0, 1e-14);
  EXPECT_NEAR(op_vnorm(Matrix::Constant(1, 1, 2.0)), 2.0, 1e-14);
  // λ_max(ΠᵀΠ) = ½ with factor 4/2.
  EXPECT_NEAR(op_vnorm(projector(4, 2).matrix), 1.0, 1e-14);
  EXPECT_THROW(op_vnorm(Matrix::Constant(1, 1, std::nan(""))), std::invalid_argument);
}

TEST(OpVnorm, BoundsAndIsAttained) {
  Rng rng(43);
  for (int trial = 0; trial < 60; ++trial) {
    const Matrix a = rng.matrix(rng.integer(1, 6), rng.integer(1, 6));
    const double norm = op_vnorm(a);

    // Independent value: power iteration on AᵀA.
    const double lambda = testing::oracle_power_lambda(a.transpose() * a, rng);
    EXPECT_NEAR(norm, std::sqrt(static_cast<double>(a.cols()) / a.rows() * lambda), 1e-6 * std::max(1.0, norm));

    double best = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Vector x = rng.vector(rng.integer(1, 12));
      const double nx = v_norm(x);
      const double ax = v_norm(dk_apply(a, x));
      EXPECT_LE(ax, norm * nx + 1e-9);
      if (x.size() == a.cols()) best = std::max(best, ax / nx);
    }
    // Push a random direction in ℝ^cols towards the top right-singular vector.
    Vector x = rng.vector(a.cols());
    for (int it = 0; it < 500; ++it) {
      x = a.transpose() * (a * x);
      if (x.norm() == 0.0) break;
      x.normalize();
    }
    if (x.norm() > 0.0) best = std::max(best, v_norm(dk_apply(a, x)) / v_norm(x));
    EXPECT_GE(best, 0.99 * norm);
  }
}

}  // namespace
}  // namespace omega
