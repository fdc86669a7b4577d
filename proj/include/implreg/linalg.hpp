#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace implreg {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double max_abs(std::span<const double> a);
bool all_finite(std::span<const double> a);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
Vector add(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double alpha);

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  Vector column(std::size_t j) const;
  void set_column(std::size_t j, std::span<const double> v);

  std::span<const double> data() const { return data_; }

  Matrix transposed() const;
  Vector apply(std::span<const double> v) const;
  Vector apply_transposed(std::span<const double> v) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);

/// Symmetric matrix with full dense storage. Every write goes to both
/// triangles, so entries(i,j) == entries(j,i) holds bit-for-bit.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

  static SymMatrix identity(std::size_t n);
  static SymMatrix diagonal(std::span<const double> d);
  /// Symmetrizes (m + m^T)/2; m must be square.
  static SymMatrix from_matrix(const Matrix& m);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  void set(std::size_t i, std::size_t j, double v) {
    data_[i * dim_ + j] = v;
    data_[j * dim_ + i] = v;
  }
  void add_to(std::size_t i, std::size_t j, double v) {
    data_[i * dim_ + j] += v;
    if (i != j) data_[j * dim_ + i] += v;
  }
  /// this += alpha * v v^T
  void add_outer(double alpha, std::span<const double> v);

  std::span<const double> data() const { return data_; }
  Matrix to_matrix() const;
  Vector apply(std::span<const double> v) const;
  double trace() const;
  double max_abs() const;

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
SymMatrix operator*(double s, const SymMatrix& a);
/// tr(a b) for symmetric a, b.
double trace_product(const SymMatrix& a, const SymMatrix& b);
/// a b + b a (symmetric for symmetric inputs).
SymMatrix anticommutator(const SymMatrix& a, const SymMatrix& b);

/// Eigenvalues sorted descending; column k of `vectors` pairs with values[k].
struct EigenDecomposition {
  Vector values;
  Matrix vectors;

  Vector eigenvector(std::size_t k) const { return vectors.column(k); }
  SymMatrix reconstruct() const;
};

/// Orthonormal basis of a linear subspace; may be empty.
struct Subspace {
  std::size_t ambient_dim = 0;
  std::vector<Vector> basis;

  std::size_t dim() const { return basis.size(); }
  bool empty() const { return basis.empty(); }
  /// Largest deviation of the basis Gram matrix from the identity.
  double orthonormality_error() const;
};

/// Cyclic Jacobi eigendecomposition. Sign convention: the first component of
/// each eigenvector with magnitude above 1e-12 is positive. Ties in the
/// eigenvalues keep the order in which Jacobi produced them.
EigenDecomposition sym_eigendecompose(const SymMatrix& m);

/// Orthogonal projection of v onto span(s).
Vector project(std::span<const double> v, const Subspace& s);

/// Solves sigma a + a sigma = c for symmetric sigma with a positive
/// semidefinite. Works in the eigenbasis of a; components of sigma touching
/// the null space of a are zero. Throws Inconsistent when c has mass above
/// 1e-6 (relative) outside range(a).
SymMatrix solve_lyapunov(const SymMatrix& a, const SymMatrix& c);

}  // namespace implreg
