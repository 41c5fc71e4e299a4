#include "omega/analysis.hpp"

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

#include "omega/builtins.hpp"
#include "support.hpp"

namespace omega {
namespace {

using testing::max_abs_diff;
using testing::Rng;

Matrix sigma1_a() {
  Matrix a(2, 2);
  a << 0.5, 0.5, -0.5, 0.5;
  return a;
}

Matrix sigma1_b() { return (Matrix(2, 1) << 0.5, -0.5).finished(); }

Matrix chain3_a() {
  Matrix a = Matrix::Zero(3, 3);
  a(0, 1) = 1;
  a(1, 2) = 1;
  return a;
}

Matrix chain3_b() { return (Matrix(3, 1) << 0, 0, 1).finished(); }

/// Popov–Belevitch–Hautus: rank of [λI − A, B] over the eigenvalues λ of A, in
/// complex arithmetic. The controllable dimension is n minus the largest
/// per-eigenvalue deficiency only when A has one Jordan block per eigenvalue, so
/// the oracle here is the full-controllability verdict.
bool pbh_controllable(const Matrix& a, const Matrix& b) {
  using CMatrix = Eigen::MatrixXcd;
  const Dim n = a.rows();
  Eigen::EigenSolver<Matrix> es(a, false);
  for (Dim i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()[i];
    CMatrix m(n, n + b.cols());
    m.leftCols(n) = lambda * CMatrix::Identity(n, n) - a.cast<std::complex<double>>();
    m.rightCols(b.cols()) = b.cast<std::complex<double>>();
    Eigen::JacobiSVD<CMatrix> svd(m);
    const auto& s = svd.singularValues();
    Dim rank = 0;
    for (Dim k = 0; k < s.size(); ++k)
      if (s[k] > 1e-8 * std::max(1.0, s[0])) ++rank;
    if (rank < n) return false;
  }
  return true;
}

TEST(CtrbRank, Examples) {
  EXPECT_EQ(ctrb_rank(chain3_a(), chain3_b()), 3);
  EXPECT_EQ(ctrb_rank(chain3_a(), Matrix::Zero(3, 1)), 0);
  EXPECT_EQ(ctrb_rank(Matrix::Zero(4, 4), Matrix::Identity(4, 4)), 4);
  EXPECT_THROW(ctrb_rank(Matrix::Zero(3, 3), Matrix::Zero(2, 1)), std::invalid_argument);
}

TEST(ObsRank, Examples) {
  EXPECT_EQ(obs_rank(chain3_a(), Matrix::Identity(3, 3)), 3);
  EXPECT_EQ(obs_rank(chain3_a(), Matrix::Zero(1, 3)), 0);

  const OutputMap h = OutputMap::linear((Matrix(1, 2) << 1, 1).finished());
  const Matrix c = h.mode_matrix(3);
  EXPECT_LE(max_abs_diff(c, Matrix::Constant(1, 3, 2.0 / 3.0)), 1e-15);
  const Matrix a = Vector((Vector(3) << 1, 2, 3).finished()).asDiagonal();
  EXPECT_EQ(obs_rank(a, c), 3);
}

TEST(CtrbRank, AgreesWithPbh) {
  Rng rng(83);
  int deficient = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Dim n = rng.integer(1, 6);
    const Dim k = rng.integer(1, 2);
    Matrix a = rng.matrix(n, n);
    Matrix b = rng.matrix(n, k);
    // Plant uncontrollable cases: block-triangular A with B confined to the first block.
    if (trial % 3 == 0 && n > 1) {
      const Dim r = rng.integer(1, n - 1);
      a.bottomLeftCorner(n - r, r).setZero();
      b.bottomRows(n - r).setZero();
    }
    const bool full = ctrb_rank(a, b) == n;
    deficient += full ? 0 : 1;
    EXPECT_EQ(full, pbh_controllable(a, b)) << "trial " << trial;
    // Duality: observability of (Aᵀ, Bᵀ).
    EXPECT_EQ(obs_rank(a.transpose(), b.transpose()) == n, pbh_controllable(a, b));
  }
  EXPECT_GT(deficient, 20);
}

TEST(IntersectionBasis, Examples) {
  Matrix expected(4, 2);
  expected << 1, 0, 1, 0, 0, 1, 0, 1;
  EXPECT_EQ(intersection_basis(4, 6), expected);
  EXPECT_EQ(intersection_basis(2, 3), Matrix::Ones(2, 1));
  EXPECT_EQ(intersection_basis(5, 5), Matrix::Identity(5, 5));
}

TEST(IntersectionBasis, ColumnsAreLiftedGenerators) {
  for (Dim m = 1; m <= 12; ++m)
    for (Dim n = 1; n <= 12; ++n) {
      const Matrix s = intersection_basis(m, n);
      const Dim g = gcd_dim(m, n);
      ASSERT_EQ(s.cols(), g);
      for (Dim j = 0; j < g; ++j) {
        const Vector col = s.col(j);
        EXPECT_TRUE(equivalent(col, Vector(Vector::Unit(g, j))));
        EXPECT_TRUE(equivalent(col, kron_ones(Vector::Unit(g, j), n / g)));
      }
    }
}

TEST(PartialCtrb, Examples) {
  EXPECT_TRUE(partial_ctrb(sigma1_a(), sigma1_b(), Matrix::Ones(2, 1)));
  const Matrix s = (Matrix(3, 1) << 1, 0, 0).finished();
  const Matrix b = (Matrix(3, 2) << 0, 0, 1, 0, 0, 1).finished();
  EXPECT_TRUE(partial_ctrb(Matrix::Zero(3, 3), b, s));
  EXPECT_FALSE(partial_ctrb(Matrix::Zero(3, 3), Matrix::Zero(3, 1), s));
  EXPECT_THROW(partial_ctrb(Matrix::Zero(2, 2), Matrix::Zero(2, 1), Matrix::Ones(2, 2)), std::invalid_argument);
}

TEST(PartialCtrb, EmptySubspaceIsFullControllability) {
  Rng rng(89);
  for (int trial = 0; trial < 100; ++trial) {
    const Dim n = rng.integer(1, 5);
    Matrix a = rng.matrix(n, n);
    Matrix b = rng.matrix(n, 1);
    if (trial % 2 == 0) {
      b.bottomRows(n / 2).setZero();
      a.bottomLeftCorner(n / 2, n - n / 2).setZero();
    }
    EXPECT_EQ(partial_ctrb(a, b, Matrix(n, 0)), ctrb_rank(a, b) == n);
  }
}

TEST(ControllabilityReport, FlagsFollowRanks) {
  const ControllabilityReport r = controllability_report(Mode::linear("s1", sigma1_a(), sigma1_b()),
                                                         intersection_basis(2, 3));
  EXPECT_EQ(r.label, "s1");
  EXPECT_EQ(r.kalman_rank, 2);
  EXPECT_TRUE(r.fully_controllable);
  EXPECT_EQ(r.subspace_dim, 1);
  EXPECT_TRUE(r.partially_controllable);
}

TEST(ReachabilityChain, Examples) {
  DvSystem sys;
  sys.modes = {Mode::linear("s1", sigma1_a(), sigma1_b()), Mode::linear("s2", chain3_a(), chain3_b())};
  EXPECT_EQ(reachability_chain(sys, 0, 1), (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(reachability_chain(sys, 1, 1), (std::vector<std::size_t>{1}));

  DvSystem dead;
  dead.modes = {Mode::linear("a", sigma1_a(), Matrix::Zero(2, 1)), Mode::linear("b", chain3_a(), Matrix::Zero(3, 1))};
  EXPECT_FALSE(reachability_chain(dead, 0, 1).has_value());
  EXPECT_THROW(reachability_chain(dead, 0, 5), std::invalid_argument);
}

TEST(ReachabilityChain, RoutesThroughIntermediateMode) {
  // Mode 0 has no input: it hands off only where the intersection is all of ℝ² (dim 4),
  // never to dim 3 directly. Dim 4 then steers into dim 3.
  DvSystem sys;
  sys.modes = {Mode::linear("a", sigma1_a(), Matrix::Zero(2, 1)),
               Mode::linear("b", Matrix::Zero(4, 4), Matrix::Identity(4, 4)),
               Mode::linear("c", chain3_a(), chain3_b())};
  const auto chain = reachability_chain(sys, 0, 2);
  ASSERT_TRUE(chain.has_value());
  EXPECT_EQ(*chain, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ReduceModel, Examples) {
  const double c = -0.7;
  for (Dim n = 1; n <= 6; ++n)
    for (Dim m = 1; m <= n; ++m) EXPECT_LE(max_abs_diff(reduce_model(c * Matrix::Identity(n, n), m).a, c * Matrix::Identity(m, m)), 1e-12);

  const Matrix a = (Matrix(3, 3) << 1, 2, 3, 4, 5, 6, 7, 8, 10).finished();
  EXPECT_EQ(reduce_model(a, 3).a, a);

  const Matrix nil = (Matrix(2, 2) << 0, 1, 0, 0).finished();
  EXPECT_NEAR(reduce_model(nil, 1).a(0, 0), 0.5, 1e-15);
}

TEST(ReduceModel, ScalarMatrixIntoLargerSpaceIsProjectorOntoRange) {
  // For m > n, A_π = c Π(ΠᵀΠ)⁻¹Πᵀ: c on range(Π), zero on its complement.
  const double c = 2.5;
  for (Dim n = 1; n <= 5; ++n)
    for (Dim m = n + 1; m <= 9; ++m) {
      const Matrix pi = projector(n, m).matrix;
      const Matrix ap = reduce_model(c * Matrix::Identity(n, n), m).a;
      const Matrix range_projector = pi * (pi.transpose() * pi).inverse() * pi.transpose();
      EXPECT_LE(max_abs_diff(ap, c * range_projector), 1e-12);
      EXPECT_LE(max_abs_diff(ap * pi, c * pi), 1e-12);
    }
}

TEST(ReduceModel, BranchFormulasAndInputOutput) {
  Rng rng(97);
  for (int trial = 0; trial < 50; ++trial) {
    const Dim n = rng.integer(1, 7), m = rng.integer(1, 7);
    const Matrix a = rng.matrix(n, n), b = rng.matrix(n, 2), c = rng.matrix(3, n);
    const ReducedModel r = reduce_model(a, m, b, c);
    const Matrix pi = testing::oracle_projector(n, m);
    Matrix ea, ec;
    if (n >= m) {
      const Matrix inv = (pi * pi.transpose()).inverse();
      ea = pi * a * pi.transpose() * inv;
      ec = c * pi.transpose() * inv;
    } else {
      const Matrix inv = (pi.transpose() * pi).inverse();
      ea = pi * a * inv * pi.transpose();
      ec = c * inv * pi.transpose();
    }
    EXPECT_LE(max_abs_diff(r.a, ea), 1e-12 * std::max(1.0, ea.cwiseAbs().maxCoeff()));
    EXPECT_LE(max_abs_diff(r.c, ec), 1e-12 * std::max(1.0, ec.cwiseAbs().maxCoeff()));
    EXPECT_LE(max_abs_diff(r.b, pi * b), 1e-14);
  }
}

TEST(ApproxError, Examples) {
  const Dim n = 10;
  std::vector<double> times;
  for (int t = 1; t <= 100; ++t) times.push_back(t);

  const ErrorSeries flat = approx_error(builtins::scaled_identity(n), Vector::Constant(n, 500.0), n - 1, times);
  ASSERT_EQ(flat.values.size(), times.size());
  EXPECT_LE(*flat.max_value(), 1e-10);

  for (Dim m : {9, 7, 5}) {
    const ErrorSeries graded = approx_error(builtins::graded_diagonal(n), Vector::Constant(n, 500.0), m, times);
    EXPECT_LE(*graded.max_value(), 0.05) << "m=" << m;
  }

  const Matrix a = Rng(5).matrix(4, 4);
  EXPECT_LE(*approx_error(a, Vector::Ones(4), 4, {0.5, 1.0}).max_value(), 1e-12);

  const ErrorSeries zero = approx_error(Matrix::Identity(2, 2), Vector::Zero(2), 1, {1.0});
  EXPECT_FALSE(zero.values[0].has_value());
}

TEST(ApproxError, MatchesDenseOracle) {
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const Dim n = rng.integer(2, 8), m = rng.integer(1, 9);
    const Matrix a = 0.1 * rng.matrix(n, n);
    const Vector x0 = rng.vector(n);
    const std::vector<double> times{0.5, 1.0, 3.0};
    const ErrorSeries s = approx_error(a, x0, m, times);

    const Matrix pi_nm = testing::oracle_projector(n, m);
    const Matrix pi_mn = testing::oracle_projector(m, n);
    const Matrix ap = reduce_model(a, m).a;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const Matrix ta = times[i] * a, tap = times[i] * ap;
      const Vector x = ta.exp() * x0;
      const Vector xt = pi_mn * (tap.exp() * (pi_nm * x0));
      const double e = testing::oracle_vnorm(xt - x) / testing::oracle_vnorm(x);
      EXPECT_NEAR(*s.values[i], e, 1e-9);
    }
  }
}

TEST(ApproxError, InvariantUnderLiftingWhenDimensionsNest) {
  // Π^{kn}_m factors through Π^{kn}_n only when m | n or n | m; elsewhere the
  // lifted least-squares problem weighs the complement of the lift and E changes.
  Rng rng(103);
  for (int trial = 0; trial < 30; ++trial) {
    const Dim n = rng.integer(2, 4);
    const Dim m = trial % 2 == 0 ? n * rng.integer(1, 3) : (n % 2 == 0 ? n / 2 : 1);
    const Matrix a = 0.2 * rng.matrix(n, n);
    const Vector x0 = rng.vector(n);
    const std::vector<double> times{1.0, 2.0};
    const ErrorSeries base = approx_error(a, x0, m, times);
    for (Dim k : {2, 3}) {
      const Mode lifted = lift_field(Mode::linear("a", a), k);
      const ErrorSeries up = approx_error(lifted.a(), kron_ones(x0, k), m, times);
      for (std::size_t i = 0; i < times.size(); ++i) EXPECT_NEAR(*up.values[i], *base.values[i], 1e-9);
    }
  }
}

TEST(RestrictField, DdpDisturbance) {
  Rng rng(107);
  const VectorField xi1 = restrict_field(builtins::ddp_xi, 6, 2);
  const VectorField xi2 = restrict_field(builtins::ddp_xi, 6, 3);
  for (int i = 0; i < 100; ++i) {
    const Vector x = rng.vector(2, -3, 3);
    EXPECT_LE(xi1(x).norm(), 1e-9);
    const Vector z = rng.vector(3, -3, 3);
    const Vector expected = 0.5 * (Vector(3) << 0, -1 - z[0], 1 + z[0]).finished();
    EXPECT_LE(max_abs_diff(xi2(z), expected), 1e-9);
  }
  const VectorField same = restrict_field(builtins::rotation, 2, 2);
  const Vector p = (Vector(2) << 1, 2).finished();
  EXPECT_EQ(same(p), builtins::rotation(p));
}

TEST(SpanMembership, Examples) {
  Rng rng(109);
  const VectorField xi2 = restrict_field(builtins::ddp_xi, 6, 3);
  for (int i = 0; i < 100; ++i) {
    const Vector z = rng.vector(3, -3, 3);
    EXPECT_TRUE(span_membership(xi2, {builtins::ddp_v2a, builtins::ddp_v2b}, z));
  }
  auto zero = [](const Vector&) { return Vector(Vector::Zero(2)); };
  auto e1 = [](const Vector&) { return Vector(Vector::Unit(2, 0)); };
  auto e2 = [](const Vector&) { return Vector(Vector::Unit(2, 1)); };
  EXPECT_TRUE(span_membership(zero, {e2}, Vector::Zero(2)));
  EXPECT_FALSE(span_membership(e1, {e2}, Vector::Zero(2)));
  EXPECT_THROW(span_membership(e1, {e2, e2}, Vector::Zero(2)), std::invalid_argument);
}

TEST(SpanMembership, DistributionsLieInKernelOfOutputDifferential) {
  // dh₁ = (1 + ⅔x₁, 1) annihilates V₁; dh₂ = (1 + z₁, 1, 1) annihilates V₂.
  Rng rng(113);
  for (int i = 0; i < 100; ++i) {
    const Vector x = rng.vector(2, -3, 3);
    EXPECT_NEAR((Vector(2) << 1 + 2 * x[0] / 3, 1).finished().dot(builtins::ddp_v1(x)), 0.0, 1e-12);
    const Vector z = rng.vector(3, -3, 3);
    const Vector dh2 = (Vector(3) << 1 + z[0], 1, 1).finished();
    EXPECT_NEAR(dh2.dot(builtins::ddp_v2a(z)), 0.0, 1e-12);
    EXPECT_NEAR(dh2.dot(builtins::ddp_v2b(z)), 0.0, 1e-12);
  }
}

TEST(AggregateRun, Examples) {
  Rng rng(127);
  const Matrix a = 0.3 * rng.matrix(3, 3);
  const Mode nominal = Mode::linear("n", a);
  const AggregateRun same = aggregate_run(nominal, nominal, rng.vector(3), 2.0, 0.01);
  EXPECT_LE(*same.error.max_value(), 1e-9);

  // Member obtained from the nominal by reduction: the run is approx_error computed the other way round.
  const Dim m = 5;
  const Vector x0 = rng.vector(3);
  const Mode reduced = Mode::linear("m", reduce_model(a, m).a);
  const AggregateRun run = aggregate_run(reduced, nominal, x0, 1.0, 0.25);
  const ErrorSeries direct = approx_error(a, x0, m, run.error.times);
  ASSERT_EQ(run.error.values.size(), direct.values.size());
  for (std::size_t i = 0; i < direct.values.size(); ++i) EXPECT_NEAR(*run.error.values[i], *direct.values[i], 1e-9);

  const AggregateRun off = aggregate_run(Mode::linear("n1", Matrix::Constant(1, 1, -0.1)), nominal,
                                         (Vector(3) << 1, -2, 1).finished(), 1.0, 0.1);
  for (const auto& v : off.error.values) {
    ASSERT_TRUE(v.has_value());
    EXPECT_TRUE(std::isfinite(*v));
  }
}

}  // namespace
}  // namespace omega
