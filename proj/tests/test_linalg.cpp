#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "support.hpp"

using namespace ptf;
using ptf::testing::max_abs_diff;
using ptf::testing::random_matrix;

namespace {

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  return e;
}

}  // namespace

TEST(Matrix, RejectsNonFiniteEntries) {
  EXPECT_THROW(Matrix(1, 1, std::vector<double>{NAN}), NonFiniteValue);
  EXPECT_THROW(Matrix({{1.0, INFINITY}}), NonFiniteValue);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionMismatch);
}

TEST(Matrix, ShapeMismatchIsAnError) {
  const Matrix a(2, 3), b(2, 3);
  EXPECT_THROW(a * b, DimensionMismatch);
  EXPECT_THROW(a + Matrix(3, 2), DimensionMismatch);
}

TEST(SolveLinear, IdentityAndDiagonal) {
  std::mt19937 rng(1);
  const Matrix m = random_matrix(rng, 3, 2);
  EXPECT_LE(max_abs_diff(solve_linear(Matrix::identity(3), m), m), 1e-15);
  const Matrix x = solve_linear(Matrix{{2, 0}, {0, 4}}, Matrix{{2}, {8}});
  EXPECT_DOUBLE_EQ(x(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(x(1, 0), 2.0);
}

TEST(SolveLinear, RecoversPlantedSolution) {
  std::mt19937 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = ptf::testing::random_well_conditioned(rng, 5);
    const Matrix x_true = random_matrix(rng, 5, 2);
    EXPECT_LE(max_abs_diff(solve_linear(a, a * x_true), x_true), 1e-9);
  }
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = ptf::testing::random_well_conditioned(rng, 6);
    const Matrix b = random_matrix(rng, 6, 1);
    EXPECT_LE((a * solve_linear(a, b) - b).frobenius_norm(), 1e-9);
  }
}

TEST(SolveLinear, SingularMatrixRejected) {
  EXPECT_THROW(solve_linear(Matrix{{1, 2}, {2, 4}}, Matrix{{1}, {1}}), SingularMatrix);
}

TEST(Kron, IdentityAndScalarFactors) {
  const Matrix m{{1, 2}, {3, 4}};
  const Matrix k = kron(Matrix::identity(2), m);
  EXPECT_EQ(k.block(0, 0, 2, 2), m);
  EXPECT_EQ(k.block(2, 2, 2, 2), m);
  EXPECT_EQ(k.block(0, 2, 2, 2), Matrix(2, 2));
  EXPECT_EQ(kron(Matrix{{2}}, m), 2.0 * m);
}

TEST(Kron, MixedProductAndTranspose) {
  std::mt19937 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = random_matrix(rng, 2, 2), b = random_matrix(rng, 2, 2);
    const Matrix c = random_matrix(rng, 2, 2), d = random_matrix(rng, 2, 2);
    EXPECT_LE(max_abs_diff(kron(a, b) * kron(c, d), kron(a * c, b * d)), 1e-12);
    EXPECT_LE(max_abs_diff(kron(a, b).transpose(), kron(a.transpose(), b.transpose())), 1e-12);
  }
}

TEST(Kron, RowMajorVectorisation) {
  std::mt19937 rng(4);
  const Matrix l = random_matrix(rng, 3, 2), x = random_matrix(rng, 2, 4), r = random_matrix(rng, 4, 3);
  EXPECT_LE(max_abs_diff(vec(l * x * r), kron(l, r.transpose()) * vec(x)), 1e-12);
  EXPECT_EQ(unvec(vec(x), 2, 4), x);
}

TEST(LinearMatrixSystem, ZeroDynamicsCase) {
  // X * 0 = 0 * X + B U,  C X = C  with C invertible.
  const Matrix b{{1, 0}, {0, 2}}, c{{2, 1}, {1, 3}};
  LinearMatrixSystem sys;
  const auto x = sys.add_unknown(2, 2);
  const auto u = sys.add_unknown(2, 2);
  const auto dyn = sys.add_equation(Matrix(2, 2));
  sys.add_term(dyn, b, u, Matrix::identity(2));
  const auto out = sys.add_equation(c);
  sys.add_term(out, c, x, Matrix::identity(2));
  const auto sol = solve_sylvester_general(sys);
  EXPECT_LE(max_abs_diff(sol.unknowns[0], Matrix::identity(2)), 1e-12);
  EXPECT_LE(sol.unknowns[1].max_abs(), 1e-12);
}

TEST(LinearMatrixSystem, RecoversPlantedRegulatorPair) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_matrix(rng, 3, 3), bm = ptf::testing::random_well_conditioned(rng, 3);
    const Matrix c = ptf::testing::random_well_conditioned(rng, 3);
    const Matrix s = random_matrix(rng, 2, 2);
    const Matrix x_true = random_matrix(rng, 3, 2), u_true = random_matrix(rng, 3, 2);
    // Build a consistent right-hand side for X S - A X - B U = R and C X = Q.
    const Matrix rhs = x_true * s - a * x_true - bm * u_true;
    LinearMatrixSystem sys;
    const auto x = sys.add_unknown(3, 2), u = sys.add_unknown(3, 2);
    const auto e1 = sys.add_equation(rhs);
    sys.add_term(e1, Matrix::identity(3), x, s);
    sys.add_term(e1, -a, x, Matrix::identity(2));
    sys.add_term(e1, -bm, u, Matrix::identity(2));
    const auto e2 = sys.add_equation(c * x_true);
    sys.add_term(e2, c, x, Matrix::identity(2));
    const auto sol = sys.solve();
    EXPECT_LE(max_abs_diff(sol.unknowns[0], x_true), 1e-9);
    EXPECT_LE(max_abs_diff(sol.unknowns[1], u_true), 1e-9);
    EXPECT_LE(sol.residual, 1e-9);
  }
}

TEST(LinearMatrixSystem, InconsistentSystemRaisesNoSolution) {
  LinearMatrixSystem sys;
  const auto x = sys.add_unknown(1, 1);
  const auto e1 = sys.add_equation(Matrix{{1}});
  sys.add_term(e1, Matrix{{1}}, x, Matrix{{1}});
  const auto e2 = sys.add_equation(Matrix{{2}});
  sys.add_term(e2, Matrix{{1}}, x, Matrix{{1}});
  try {
    sys.solve();
    FAIL() << "expected NoSolution";
  } catch (const NoSolution& e) {
    EXPECT_GT(e.residual(), 1e-6);
  }
}

TEST(LeastSquares, MinimumNormForRankDeficientSystem) {
  const Matrix a{{1, 1}, {1, 1}};
  const auto ls = solve_least_squares(a, Matrix{{2}, {2}});
  EXPECT_EQ(ls.rank, 1u);
  EXPECT_NEAR(ls.x(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(ls.x(1, 0), 1.0, 1e-12);
}

TEST(Care, ScalarClosedForms) {
  EXPECT_NEAR(solve_care(Matrix{{0}}, Matrix{{1}})(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(solve_care(Matrix{{-1}}, Matrix{{1}})(0, 0), std::sqrt(2.0) - 1.0, 1e-10);
}

TEST(Care, Sec4Leader) {
  const auto& s = ptf::testing::sec4();
  const Matrix& a = s.leader.a0;
  const Matrix& b = s.leader.b0;
  const Matrix p = solve_care(a, b);
  EXPECT_LE(care_residual(a, b, p).frobenius_norm(), 1e-8);
  EXPECT_LE((p - p.transpose()).max_abs(), 1e-10);
  EXPECT_GT(lambda_min(p), 1e-10);
  EXPECT_TRUE(is_hurwitz(a - 0.5 * b * b.transpose() * p));
}

TEST(Care, PropertiesOnRandomStabilizablePairs) {
  std::mt19937 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 4, 4, -2.0, 2.0);
    const Matrix b = random_matrix(rng, 4, 2);
    const Matrix p = solve_care(a, b);
    EXPECT_LE(care_residual(a, b, p).frobenius_norm(), 1e-8) << "trial " << trial;
    EXPECT_LE((p - p.transpose()).max_abs(), 1e-10);
    EXPECT_GT(lambda_min(p), 1e-10);
  }
}

TEST(Care, UnstabilizablePairDiverges) {
  // The unstable mode at +1 is not reachable from b.
  EXPECT_THROW(solve_care(Matrix{{1, 0}, {0, -1}}, Matrix{{0}, {1}}), CareDiverged);
}

TEST(EigSym, DiagonalAndTwoByTwo) {
  const auto d = eig_sym(Matrix{{3, 0, 0}, {0, -1, 0}, {0, 0, 2}});
  EXPECT_EQ(d.values, (std::vector<double>{-1, 2, 3}));
  const auto e = eig_sym(Matrix{{2, 1}, {1, 2}});
  EXPECT_NEAR(e.values[0], 1.0, 1e-12);
  EXPECT_NEAR(e.values[1], 3.0, 1e-12);
}

TEST(EigSym, ReconstructionTraceAndDeterminant) {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix s = ptf::testing::random_symmetric(rng, 5);
    const auto e = eig_sym(s);
    Matrix lam(5, 5);
    double sum = 0.0, prod = 1.0;
    for (std::size_t k = 0; k < 5; ++k) {
      lam(k, k) = e.values[k];
      sum += e.values[k];
      prod *= e.values[k];
    }
    EXPECT_LE(max_abs_diff(e.vectors * lam * e.vectors.transpose(), s), 1e-9);
    EXPECT_LE(max_abs_diff(e.vectors.transpose() * e.vectors, Matrix::identity(5)), 1e-10);
    EXPECT_NEAR(sum, s.trace(), 1e-9);
    EXPECT_NEAR(prod, determinant(s), 1e-8 * std::abs(determinant(s)));

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(to_eigen(s));
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(e.values[k], oracle.eigenvalues()(k), 1e-10);
  }
}

TEST(EigSym, RejectsAsymmetricInput) { EXPECT_THROW(eig_sym(Matrix{{1, 2}, {0, 1}}), NotSymmetric); }

TEST(Norm2, Examples) {
  EXPECT_NEAR(norm2(Matrix::identity(4)), 1.0, 1e-12);
  EXPECT_NEAR(norm2(Matrix{{3, 0}, {0, -5}}), 5.0, 1e-10);
  EXPECT_NEAR(norm2(Matrix{{0, 2}, {0, 0}}), 2.0, 1e-10);
}

TEST(Norm2, AgreesWithSingularValues) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(rng, 3, 5);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(a));
    EXPECT_NEAR(norm2(a), svd.singularValues()(0), 1e-10 * svd.singularValues()(0));
  }
}

TEST(PinvRight, Examples) {
  const Matrix b{{2, 1}, {1, 1}};
  EXPECT_LE(max_abs_diff(pinv_right(b), inverse(b)), 1e-12);
  const Matrix p = pinv_right(Matrix{{1, 0}});
  EXPECT_EQ(p, (Matrix{{1}, {0}}));
  const Matrix& b1 = ptf::testing::sec4().followers[0].b;
  EXPECT_LE(max_abs_diff(b1 * pinv_right(b1), Matrix::identity(3)), 1e-9);
}

TEST(PinvRight, RankDeficientRejected) {
  EXPECT_THROW(pinv_right(Matrix{{1, 2}, {2, 4}}), RankDeficient);
  EXPECT_THROW(pinv_right(Matrix{{1}, {2}}), RankDeficient);
}

TEST(Lyapunov, SolvesAgainstEigenOracle) {
  std::mt19937 rng(9);
  Matrix a = random_matrix(rng, 3, 3);
  for (std::size_t i = 0; i < 3; ++i) a(i, i) -= 4.0;
  const Matrix p = solve_lyapunov(a, Matrix::identity(3));
  const Eigen::MatrixXd ea = to_eigen(a), ep = to_eigen(p);
  EXPECT_LE((ea.transpose() * ep + ep * ea + Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(is_hurwitz(a));
  EXPECT_FALSE(is_hurwitz(Matrix{{1, 0}, {0, -1}}));
}
