#include "implreg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "implreg/errors.hpp"

namespace implreg {

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::InvalidInput, "dot: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double v) { return std::isfinite(v); });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), ErrorKind::InvalidInput, "axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

Vector add(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::InvalidInput, "add: dimension mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::InvalidInput, "subtract: dimension mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vector scaled(std::span<const double> a, double alpha) {
  Vector r(a.begin(), a.end());
  for (double& v : r) v *= alpha;
  return r;
}

// ---------------------------------------------------------------------------

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector Matrix::column(std::size_t j) const {
  Vector c(rows_);
  for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
  return c;
}

void Matrix::set_column(std::size_t j, std::span<const double> v) {
  require(v.size() == rows_, ErrorKind::InvalidInput, "set_column: dimension mismatch");
  for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vector Matrix::apply(std::span<const double> v) const {
  require(v.size() == cols_, ErrorKind::InvalidInput, "Matrix::apply: dimension mismatch");
  Vector r(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) r[i] = dot(row(i), v);
  return r;
}

Vector Matrix::apply_transposed(std::span<const double> v) const {
  require(v.size() == rows_, ErrorKind::InvalidInput,
          "Matrix::apply_transposed: dimension mismatch");
  Vector r(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) axpy(v[i], row(i), r);
  return r;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorKind::InvalidInput, "multiply: dimension mismatch");
  Matrix r(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

// ---------------------------------------------------------------------------

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
  return m;
}

SymMatrix SymMatrix::from_matrix(const Matrix& m) {
  require(m.rows() == m.cols(), ErrorKind::InvalidInput, "from_matrix: not square");
  SymMatrix s(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i; j < m.cols(); ++j) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
  return s;
}

void SymMatrix::add_outer(double alpha, std::span<const double> v) {
  require(v.size() == dim_, ErrorKind::InvalidInput, "add_outer: dimension mismatch");
  for (std::size_t i = 0; i < dim_; ++i) {
    const double avi = alpha * v[i];
    for (std::size_t j = i; j < dim_; ++j) add_to(i, j, avi * v[j]);
  }
}

Matrix SymMatrix::to_matrix() const {
  Matrix m(dim_, dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
  return m;
}

Vector SymMatrix::apply(std::span<const double> v) const {
  require(v.size() == dim_, ErrorKind::InvalidInput, "SymMatrix::apply: dimension mismatch");
  Vector r(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i)
    r[i] = dot(std::span<const double>(data_.data() + i * dim_, dim_), v);
  return r;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double SymMatrix::max_abs() const { return implreg::max_abs(data_); }

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
  require(a.dim() == b.dim(), ErrorKind::InvalidInput, "SymMatrix +: dimension mismatch");
  SymMatrix r(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = i; j < a.dim(); ++j) r.set(i, j, a(i, j) + b(i, j));
  return r;
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
  require(a.dim() == b.dim(), ErrorKind::InvalidInput, "SymMatrix -: dimension mismatch");
  SymMatrix r(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = i; j < a.dim(); ++j) r.set(i, j, a(i, j) - b(i, j));
  return r;
}

SymMatrix operator*(double s, const SymMatrix& a) {
  SymMatrix r(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = i; j < a.dim(); ++j) r.set(i, j, s * a(i, j));
  return r;
}

double trace_product(const SymMatrix& a, const SymMatrix& b) {
  require(a.dim() == b.dim(), ErrorKind::InvalidInput, "trace_product: dimension mismatch");
  // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij B_ij for symmetric B
  return dot(a.data(), b.data());
}

SymMatrix anticommutator(const SymMatrix& a, const SymMatrix& b) {
  require(a.dim() == b.dim(), ErrorKind::InvalidInput, "anticommutator: dimension mismatch");
  const std::size_t n = a.dim();
  const Matrix ab = multiply(a.to_matrix(), b.to_matrix());
  SymMatrix r(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) r.set(i, j, ab(i, j) + ab(j, i));
  return r;
}

SymMatrix EigenDecomposition::reconstruct() const {
  const std::size_t n = values.size();
  SymMatrix r(n);
  for (std::size_t k = 0; k < n; ++k) r.add_outer(values[k], vectors.column(k));
  return r;
}

double Subspace::orthonormality_error() const {
  double err = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = i; j < basis.size(); ++j) {
      const double target = i == j ? 1.0 : 0.0;
      err = std::max(err, std::abs(dot(basis[i], basis[j]) - target));
    }
  return err;
}

// ---------------------------------------------------------------------------

EigenDecomposition sym_eigendecompose(const SymMatrix& m) {
  require(all_finite(m.data()), ErrorKind::InvalidInput, "sym_eigendecompose: non-finite input");
  const std::size_t n = m.dim();
  Matrix a = m.to_matrix();
  Matrix v = Matrix::identity(n);

  const double scale = std::max(m.max_abs(), 1e-300);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= 1e-300) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        // Rotation annihilating a(p,q): t = tan(phi), stable root.
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    Vector col = v.column(order[k]);
    for (double x : col) {
      if (std::abs(x) > 1e-12) {
        if (x < 0.0)
          for (double& y : col) y = -y;
        break;
      }
    }
    out.vectors.set_column(k, col);
  }
  return out;
}

Vector project(std::span<const double> v, const Subspace& s) {
  Vector r(v.size(), 0.0);
  if (s.empty()) return r;
  for (const Vector& b : s.basis) {
    require(b.size() == v.size(), ErrorKind::InvalidInput, "project: dimension mismatch");
    axpy(dot(b, v), b, r);
  }
  return r;
}

SymMatrix solve_lyapunov(const SymMatrix& a, const SymMatrix& c) {
  require(a.dim() == c.dim(), ErrorKind::InvalidInput, "solve_lyapunov: dimension mismatch");
  require(all_finite(a.data()) && all_finite(c.data()), ErrorKind::InvalidInput,
          "solve_lyapunov: non-finite input");
  const std::size_t n = a.dim();
  const EigenDecomposition eig = sym_eigendecompose(a);
  const double lmax = n ? std::max(eig.values.front(), 0.0) : 0.0;
  if (n && eig.values.back() < -1e-10 * std::max(lmax, 1.0))
    fail(ErrorKind::InvalidInput, "solve_lyapunov: a is not positive semidefinite");

  // c' = Q^T c Q
  const Matrix& q = eig.vectors;
  const Matrix cq = multiply(c.to_matrix(), q);
  const Matrix cp = multiply(q.transposed(), cq);

  const double null_cut = 1e-12 * lmax;
  const double c_scale = std::max(c.max_abs(), 1e-300);
  Matrix sp(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const bool null_i = eig.values[i] <= null_cut;
      const bool null_j = eig.values[j] <= null_cut;
      const double cij = 0.5 * (cp(i, j) + cp(j, i));
      if (null_i || null_j) {
        if (std::abs(cij) > 1e-6 * c_scale)
          fail(ErrorKind::Inconsistent, "solve_lyapunov: c has mass outside range(a)");
        continue;
      }
      sp(i, j) = cij / (eig.values[i] + eig.values[j]);
    }
  }
  return SymMatrix::from_matrix(multiply(q, multiply(sp, q.transposed())));
}

}  // namespace implreg
