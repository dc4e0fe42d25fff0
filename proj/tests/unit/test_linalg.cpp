#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "generators.hpp"
#include "invreg/errors.hpp"
#include "invreg/linalg.hpp"

namespace invreg {
namespace {

using testing::Gen;
using testing::max_abs_diff;

TEST(Matrix, RejectsWrongEntryCount) {
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), DimensionMismatch);
}

TEST(Matrix, RejectsNonFiniteEntries) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(Matrix(1, 2, std::vector<double>{1, nan}), NonFiniteValue);
  EXPECT_THROW(Matrix(1, 1, std::vector<double>{INFINITY}), NonFiniteValue);
}

TEST(Matrix, ProductsAndTranspose) {
  const Matrix a = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(a.transpose(), Matrix::from_rows({{1, 4}, {2, 5}, {3, 6}}));
  EXPECT_EQ(a * Matrix::identity(3), a);
  const Vector v{1, 0, -1};
  EXPECT_EQ(a * v, (Vector{-2, -2}));
  const Vector w{1, 2};
  EXPECT_EQ(transpose_times(a, w), a.transpose() * w);
  EXPECT_THROW(a * a, DimensionMismatch);
}

TEST(Vectors, SizeMismatchThrows) {
  EXPECT_THROW(add(Vector{1, 2}, Vector{1}), DimensionMismatch);
  EXPECT_THROW(dot(Vector{1}, Vector{1, 2}), DimensionMismatch);
}

TEST(SpdSolve, IdentityLeavesRightHandSide) {
  const Matrix x = spd_solve(Matrix::identity(2), Matrix::from_rows({{3}, {4}}));
  EXPECT_EQ(x, Matrix::from_rows({{3}, {4}}));
}

TEST(SpdSolve, DiagonalInverse) {
  const Matrix x = spd_solve(Matrix::from_rows({{4, 0}, {0, 9}}), Matrix::identity(2));
  EXPECT_NEAR(x(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(x(1, 1), 1.0 / 9.0, 1e-15);
  EXPECT_EQ(x(0, 1), 0.0);
  EXPECT_EQ(x(1, 0), 0.0);
}

TEST(SpdSolve, HandSolvedTwoByTwo) {
  const Matrix x = spd_solve(Matrix::from_rows({{2, 1}, {1, 2}}), Matrix::from_rows({{1}, {1}}));
  EXPECT_NEAR(x(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(x(1, 0), 1.0 / 3.0, 1e-15);
}

TEST(Cholesky, RejectsIndefiniteAndAsymmetric) {
  EXPECT_THROW(Cholesky(Matrix::from_rows({{1, 2}, {2, 1}})), NotPositiveDefinite);
  EXPECT_THROW(Cholesky(Matrix::from_rows({{1, 0}, {0, 0}})), NotPositiveDefinite);
  EXPECT_THROW(Cholesky(Matrix::from_rows({{2, 1}, {0, 2}})), NotSymmetric);
  EXPECT_THROW(Cholesky(Matrix(2, 3)), DimensionMismatch);
}

TEST(SymMinEig, Examples) {
  EXPECT_NEAR(sym_min_eig(Matrix::identity(3)), 1.0, 1e-14);
  const Vector diag{1, 3, 7};
  EXPECT_NEAR(sym_min_eig(Matrix::diagonal(diag)), 1.0, 1e-14);
  EXPECT_NEAR(sym_min_eig(Matrix::from_rows({{2, 1}, {1, 2}})), 1.0, 1e-12);
  EXPECT_NEAR(sym_max_eig(Matrix::from_rows({{2, 1}, {1, 2}})), 3.0, 1e-12);
}

TEST(SymEigenvalues, AscendingOrder) {
  const Vector ev = sym_eigenvalues(Matrix::from_rows({{5, 0, 0}, {0, -2, 0}, {0, 0, 1}}));
  EXPECT_EQ(ev, (Vector{-2, 1, 5}));
}

TEST(SpdSolveProperty, InverseResidual) {
  Gen gen(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t d = gen.index(1, 8);
    const Matrix a = gen.spd(d);
    const Matrix inv = spd_solve(a, Matrix::identity(d));
    ASSERT_LE(max_abs_diff(a * inv, Matrix::identity(d)), 1e-8) << "trial " << trial;
  }
}

TEST(SymMinEigProperty, RotatedDiagonal) {
  Gen gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = gen.index(1, 7);
    const Vector diag = gen.vector(d, -5.0, 5.0);
    const Matrix q = gen.orthogonal(d);
    const Matrix a = q.transpose() * Matrix::diagonal(diag) * q;
    const Matrix sym = 0.5 * (a + a.transpose());
    const double expected = *std::min_element(diag.begin(), diag.end());
    ASSERT_NEAR(sym_min_eig(sym), expected, 1e-8) << "trial " << trial;
  }
}

TEST(SymMinEigProperty, ShiftByIdentity) {
  Gen gen(13);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = gen.index(1, 8);
    const Matrix a = gen.symmetric(d, -3.0, 3.0);
    const double c = gen.uniform(-10.0, 10.0);
    ASSERT_NEAR(sym_min_eig(a + c * Matrix::identity(d)), sym_min_eig(a) + c, 1e-8)
        << "trial " << trial;
  }
}

TEST(SymEigenvaluesProperty, TraceIsPreserved) {
  Gen gen(14);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = gen.index(1, 10);
    const Matrix a = gen.symmetric(d, -2.0, 2.0);
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += a(i, i);
    double sum = 0.0;
    for (double e : sym_eigenvalues(a)) sum += e;
    ASSERT_NEAR(sum, trace, 1e-10);
  }
}

}  // namespace
}  // namespace invreg
