#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "implreg/errors.hpp"
#include "implreg/linalg.hpp"
#include "../support/test_util.hpp"

using namespace implreg;

namespace {

SymMatrix random_sym(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> nd;
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m.set(i, j, nd(gen));
  return m;
}

// Random PSD matrix of the given rank.
SymMatrix random_psd(std::mt19937_64& gen, std::size_t n, std::size_t rank) {
  SymMatrix m(n);
  for (std::size_t r = 0; r < rank; ++r) m.add_outer(1.0, testutil::random_vector(gen, n));
  return m;
}

double max_abs_diff(const SymMatrix& a, const SymMatrix& b) { return (a - b).max_abs(); }

}  // namespace

TEST(Linalg, VectorBasics) {
  const Vector a{1, 2, 3}, b{4, -5, 6};
  EXPECT_DOUBLE_EQ(dot(a, b), 12.0);
  EXPECT_DOUBLE_EQ(norm(Vector{3, 4}), 5.0);
  EXPECT_DOUBLE_EQ(max_abs(b), 6.0);
  Vector y = b;
  axpy(2.0, a, y);
  EXPECT_EQ(y, (Vector{6, -1, 12}));
  EXPECT_TRUE(all_finite(a));
  EXPECT_FALSE(all_finite(Vector{1, NAN}));
}

TEST(Linalg, SymMatrixWritesBothTriangles) {
  SymMatrix m(3);
  m.set(0, 2, 1.5);
  m.add_to(1, 0, -2.0);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m(i, j), m(j, i));
  EXPECT_EQ(m(2, 0), 1.5);
  EXPECT_EQ(m(0, 1), -2.0);
}

TEST(Linalg, EigenIdentity) {
  const EigenDecomposition e = sym_eigendecompose(SymMatrix::identity(3));
  for (double v : e.values) EXPECT_NEAR(v, 1.0, 1e-15);
  EXPECT_LE(max_abs_diff(e.reconstruct(), SymMatrix::identity(3)), 1e-14);
}

TEST(Linalg, EigenAlreadyDiagonal) {
  const EigenDecomposition e = sym_eigendecompose(SymMatrix::diagonal(Vector{2, 0}));
  EXPECT_EQ(e.values, (Vector{2, 0}));
  EXPECT_EQ(e.eigenvector(0), (Vector{1, 0}));
  EXPECT_EQ(e.eigenvector(1), (Vector{0, 1}));
}

TEST(Linalg, EigenTwoByTwoByHand) {
  SymMatrix m(2);
  m.set(0, 0, 2);
  m.set(1, 1, 2);
  m.set(0, 1, 1);
  const EigenDecomposition e = sym_eigendecompose(m);
  EXPECT_NEAR(e.values[0], 3.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  const Vector v0 = e.eigenvector(0), v1 = e.eigenvector(1);
  EXPECT_NEAR(v0[0], r, 1e-14);
  EXPECT_NEAR(v0[1], r, 1e-14);
  // first component positive by convention
  EXPECT_NEAR(v1[0], r, 1e-14);
  EXPECT_NEAR(v1[1], -r, 1e-14);
}

TEST(Linalg, EigenRejectsNonFinite) {
  SymMatrix m(2);
  m.set(0, 1, NAN);
  try {
    sym_eigendecompose(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(Linalg, EigenRandomMatchesEigenLibrary) {
  std::mt19937_64 gen(7);
  for (std::size_t n : {1u, 2u, 5u, 17u, 40u, 64u}) {
    const SymMatrix m = random_sym(gen, n);
    const EigenDecomposition e = sym_eigendecompose(m);

    const double scale = std::max(1.0, m.max_abs());
    EXPECT_LE(max_abs_diff(e.reconstruct(), m), 1e-8 * scale) << n;
    const Matrix qtq = multiply(e.vectors.transposed(), e.vectors);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        EXPECT_NEAR(qtq(i, j), i == j ? 1.0 : 0.0, 1e-10);
    for (std::size_t k = 1; k < n; ++k) EXPECT_GE(e.values[k - 1], e.values[k]);

    Eigen::MatrixXd em(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) em(i, j) = m(i, j);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(em);
    for (std::size_t k = 0; k < n; ++k)
      EXPECT_NEAR(e.values[k], solver.eigenvalues()(static_cast<Eigen::Index>(n - 1 - k)),
                  1e-10 * scale);
  }
}

TEST(Linalg, EigenSignConvention) {
  std::mt19937_64 gen(11);
  const EigenDecomposition e = sym_eigendecompose(random_sym(gen, 6));
  for (std::size_t k = 0; k < 6; ++k) {
    const Vector v = e.eigenvector(k);
    for (double x : v)
      if (std::abs(x) > 1e-12) {
        EXPECT_GT(x, 0.0);
        break;
      }
  }
}

TEST(Linalg, ProjectExamples) {
  Subspace s{2, {Vector{1, 0}}};
  EXPECT_EQ(project(Vector{1, 2}, s), (Vector{1, 0}));
  Subspace empty{2, {}};
  EXPECT_EQ(project(Vector{1, 2}, empty), (Vector{0, 0}));
  const double r = 1.0 / std::sqrt(2.0);
  Subspace diag{2, {Vector{r, -r}}};
  const Vector p = project(Vector{1, 1}, diag);
  EXPECT_NEAR(p[0], 0.0, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
}

TEST(Linalg, ProjectDimensionMismatch) {
  Subspace s{3, {Vector{1, 0, 0}}};
  EXPECT_THROW(project(Vector{1, 2}, s), Error);
}

TEST(Linalg, ProjectIdempotentAndOrthogonal) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 8;
    const EigenDecomposition e = sym_eigendecompose(random_sym(gen, n));
    Subspace s{n, {}};
    for (std::size_t k = 0; k < 3; ++k) s.basis.push_back(e.eigenvector(k));
    EXPECT_LE(s.orthonormality_error(), 1e-10);
    const Vector v = testutil::random_vector(gen, n);
    const Vector p = project(v, s);
    const Vector pp = project(p, s);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(pp[i], p[i], 1e-12);
    const Vector r = subtract(v, p);
    for (const Vector& b : s.basis) EXPECT_NEAR(dot(r, b), 0.0, 1e-10);
  }
}

TEST(Linalg, LyapunovExamples) {
  {
    const SymMatrix s = solve_lyapunov(SymMatrix::identity(3), SymMatrix::identity(3));
    EXPECT_LE(max_abs_diff(s, 0.5 * SymMatrix::identity(3)), 1e-14);
  }
  {
    const SymMatrix s =
        solve_lyapunov(SymMatrix::diagonal(Vector{1, 2}), SymMatrix::diagonal(Vector{2, 4}));
    EXPECT_LE(max_abs_diff(s, SymMatrix::identity(2)), 1e-14);
  }
  {
    const SymMatrix s =
        solve_lyapunov(SymMatrix::diagonal(Vector{1, 0}), SymMatrix::diagonal(Vector{1, 0}));
    EXPECT_LE(max_abs_diff(s, SymMatrix::diagonal(Vector{0.5, 0})), 1e-14);
  }
}

TEST(Linalg, LyapunovInconsistent) {
  try {
    solve_lyapunov(SymMatrix::diagonal(Vector{1, 0}), SymMatrix::identity(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Inconsistent);
  }
}

TEST(Linalg, LyapunovRandomClosesLoop) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 12);
    const std::size_t rank = 1 + static_cast<std::size_t>(trial) % n;
    const SymMatrix a = random_psd(gen, n, rank);
    // c = a x a keeps range(c) inside range(a)
    const Matrix am = a.to_matrix();
    const SymMatrix c =
        SymMatrix::from_matrix(multiply(am, multiply(random_sym(gen, n).to_matrix(), am)));
    const SymMatrix s = solve_lyapunov(a, c);
    const SymMatrix resid = anticommutator(s, a) - c;
    EXPECT_LE(resid.max_abs(), 1e-8 * std::max(1.0, c.max_abs())) << n << " rank " << rank;
  }
}
