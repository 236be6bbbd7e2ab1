#pragma once

// Dense real matrices and the small structured solvers the synthesis layer
// needs: LU, pivoted-QR least squares, Kronecker-vectorised matrix
// equations, Lyapunov/Riccati, Jacobi eigendecomposition and spectral norm.
// Everything is sized for n <= ~10; nothing here is blocked or sparse.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ptf/config.hpp"
#include "ptf/errors.hpp"

namespace ptf {

/// Row-major dense matrix. Column vectors are n x 1 matrices (see `Vector`).
/// Constructors that take entries reject NaN/Inf; arithmetic results are not
/// re-checked.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    check_finite();
  }

  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionMismatch("Matrix: entry count " + std::to_string(data_.size()) +
                              " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    check_finite();
  }

  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionMismatch("Matrix: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
    check_finite();
  }

  static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix column(std::vector<double> values) {
    const std::size_t n = values.size();
    return Matrix(n, 1, std::move(values));
  }

  static Matrix column(std::initializer_list<double> values) {
    return column(std::vector<double>(values));
  }

  static Matrix diagonal(std::span<const double> values) {
    Matrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    m.check_finite();
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  // Flat access, mostly for vectors.
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Matrix transpose() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const {
    if (r0 + nr > rows_ || c0 + nc > cols_) throw DimensionMismatch("Matrix::block out of range");
    Matrix b(nr, nc);
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t c = 0; c < nc; ++c) b(r, c) = (*this)(r0 + r, c0 + c);
    return b;
  }

  void set_block(std::size_t r0, std::size_t c0, const Matrix& b) {
    if (r0 + b.rows_ > rows_ || c0 + b.cols_ > cols_)
      throw DimensionMismatch("Matrix::set_block out of range");
    for (std::size_t r = 0; r < b.rows_; ++r)
      for (std::size_t c = 0; c < b.cols_; ++c) (*this)(r0 + r, c0 + c) = b(r, c);
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double trace() const {
    require_square("trace");
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, i);
    return s;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o, "+=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }

  Matrix& operator-=(const Matrix& o) {
    require_same_shape(o, "-=");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }

  Matrix& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }

  /// this += s * o, without a temporary.
  Matrix& add_scaled(double s, const Matrix& o) {
    require_same_shape(o, "add_scaled");
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += s * o.data_[k];
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, double s) { return a *= s; }
  friend Matrix operator*(double s, Matrix a) { return a *= s; }
  friend Matrix operator-(Matrix a) { return a *= -1.0; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) {
      throw DimensionMismatch("Matrix product: " + a.shape() + " * " + b.shape());
    }
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  std::string shape() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

 private:
  void check_finite() const {
    if (!all_finite()) throw NonFiniteValue("Matrix: non-finite entry on construction");
  }
  void require_same_shape(const Matrix& o, const char* op) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw DimensionMismatch(std::string("Matrix ") + op + ": " + shape() + " vs " + o.shape());
  }
  void require_square(const char* op) const {
    if (!is_square()) throw DimensionMismatch(std::string(op) + ": matrix not square " + shape());
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// n x 1 column. Kept as an alias so vector and matrix algebra compose.
using Vector = Matrix;

/// Euclidean norm for vectors, Frobenius for matrices.
inline double norm(const Matrix& v) { return v.frobenius_norm(); }

inline double dot(const Matrix& a, const Matrix& b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      for (std::size_t r = 0; r < b.rows(); ++r)
        for (std::size_t c = 0; c < b.cols(); ++c)
          k(i * b.rows() + r, j * b.cols() + c) = aij * b(r, c);
    }
  return k;
}

/// Row-major vectorisation: vec(X)[r*cols + c] = X(r, c).
inline Vector vec(const Matrix& x) {
  return Matrix(x.size(), 1, std::vector<double>(x.data().begin(), x.data().end()));
}

inline Matrix unvec(const Vector& v, std::size_t rows, std::size_t cols) {
  if (v.size() != rows * cols) throw DimensionMismatch("unvec: size mismatch");
  return Matrix(rows, cols, std::vector<double>(v.data().begin(), v.data().end()));
}

inline Matrix symmetrize(const Matrix& s) { return 0.5 * (s + s.transpose()); }

// ---------------------------------------------------------------------------
// LU with partial pivoting

struct LuDecomposition {
  Matrix lu;
  std::vector<std::size_t> perm;
  int sign = 1;
};

inline LuDecomposition lu_decompose(const Matrix& a, const Tolerances& tol = default_tolerances()) {
  if (!a.is_square()) throw DimensionMismatch("lu_decompose: matrix not square " + a.shape());
  const std::size_t n = a.rows();
  LuDecomposition d{a, std::vector<std::size_t>(n), 1};
  std::iota(d.perm.begin(), d.perm.end(), std::size_t{0});
  const double floor = tol.singular_pivot * a.max_abs();
  Matrix& m = d.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t r = k + 1; r < n; ++r)
      if (std::abs(m(r, k)) > std::abs(m(p, k))) p = r;
    if (std::abs(m(p, k)) <= floor || m(p, k) == 0.0) {
      throw SingularMatrix("singular matrix: pivot " + std::to_string(std::abs(m(p, k))) +
                           " at column " + std::to_string(k));
    }
    if (p != k) {
      for (std::size_t c = 0; c < n; ++c) std::swap(m(k, c), m(p, c));
      std::swap(d.perm[k], d.perm[p]);
      d.sign = -d.sign;
    }
    for (std::size_t r = k + 1; r < n; ++r) {
      const double f = m(r, k) / m(k, k);
      m(r, k) = f;
      for (std::size_t c = k + 1; c < n; ++c) m(r, c) -= f * m(k, c);
    }
  }
  return d;
}

inline Matrix lu_solve(const LuDecomposition& d, const Matrix& b) {
  const std::size_t n = d.lu.rows();
  if (b.rows() != n) throw DimensionMismatch("lu_solve: rhs rows " + b.shape());
  Matrix x(n, b.cols());
  for (std::size_t c = 0; c < b.cols(); ++c) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = b(d.perm[i], c);
      for (std::size_t k = 0; k < i; ++k) s -= d.lu(i, k) * y[k];
      y[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = y[i];
      for (std::size_t k = i + 1; k < n; ++k) s -= d.lu(i, k) * x(k, c);
      x(i, c) = s / d.lu(i, i);
    }
  }
  return x;
}

inline Matrix solve_linear(const Matrix& a, const Matrix& b,
                           const Tolerances& tol = default_tolerances()) {
  if (!a.is_square()) throw DimensionMismatch("solve_linear: matrix not square " + a.shape());
  if (b.rows() != a.rows()) throw DimensionMismatch("solve_linear: " + a.shape() + " vs " + b.shape());
  return lu_solve(lu_decompose(a, tol), b);
}

inline Matrix inverse(const Matrix& a, const Tolerances& tol = default_tolerances()) {
  return solve_linear(a, Matrix::identity(a.rows()), tol);
}

inline double determinant(const Matrix& a) {
  if (!a.is_square()) throw DimensionMismatch("determinant: matrix not square");
  try {
    const auto d = lu_decompose(a);
    double det = d.sign;
    for (std::size_t i = 0; i < a.rows(); ++i) det *= d.lu(i, i);
    return det;
  } catch (const SingularMatrix&) {
    return 0.0;
  }
}

// ---------------------------------------------------------------------------
// Minimum-norm least squares via pivoted Householder QR followed by a second
// QR on the retained rows (complete orthogonal decomposition).

namespace detail {

// Applies the reflector I - 2 v v^T / (v^T v) from the left to rows [k, m)
// of `a`, columns [c0, cols).
inline void reflect_rows(Matrix& a, const std::vector<double>& v, std::size_t k, std::size_t c0) {
  double vv = 0.0;
  for (double x : v) vv += x * x;
  if (vv == 0.0) return;
  for (std::size_t c = c0; c < a.cols(); ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < v.size(); ++r) s += v[r] * a(k + r, c);
    s *= 2.0 / vv;
    for (std::size_t r = 0; r < v.size(); ++r) a(k + r, c) -= s * v[r];
  }
}

inline std::vector<double> householder_vector(const Matrix& a, std::size_t k, std::size_t col) {
  std::vector<double> v(a.rows() - k);
  double nrm = 0.0;
  for (std::size_t r = k; r < a.rows(); ++r) {
    v[r - k] = a(r, col);
    nrm += v[r - k] * v[r - k];
  }
  nrm = std::sqrt(nrm);
  if (nrm == 0.0) return std::vector<double>(v.size(), 0.0);
  v[0] += v[0] >= 0.0 ? nrm : -nrm;
  return v;
}

struct Qr {
  Matrix qt;  // Q^T, accumulated
  Matrix r;
  std::vector<std::size_t> perm;
};

// A * P = Q * R. With `pivot`, columns are chosen by largest remaining norm.
inline Qr householder_qr(const Matrix& a, bool pivot) {
  const std::size_t m = a.rows(), n = a.cols();
  Qr out{Matrix::identity(m), a, std::vector<std::size_t>(n)};
  std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
  const std::size_t steps = std::min(m, n);
  for (std::size_t k = 0; k < steps; ++k) {
    if (pivot) {
      std::size_t best = k;
      double best_norm = -1.0;
      for (std::size_t c = k; c < n; ++c) {
        double s = 0.0;
        for (std::size_t r = k; r < m; ++r) s += out.r(r, c) * out.r(r, c);
        if (s > best_norm) {
          best_norm = s;
          best = c;
        }
      }
      if (best != k) {
        for (std::size_t r = 0; r < m; ++r) std::swap(out.r(r, k), out.r(r, best));
        std::swap(out.perm[k], out.perm[best]);
      }
    }
    const auto v = householder_vector(out.r, k, k);
    reflect_rows(out.r, v, k, 0);
    reflect_rows(out.qt, v, k, 0);
  }
  return out;
}

}  // namespace detail

struct LeastSquaresSolution {
  Matrix x;
  double residual = 0.0;  // ||a x - b||_F
  std::size_t rank = 0;
};

/// Minimum-norm least-squares solution of a x = b for any shape of a.
inline LeastSquaresSolution solve_least_squares(const Matrix& a, const Matrix& b,
                                                const Tolerances& tol = default_tolerances()) {
  if (a.rows() != b.rows()) throw DimensionMismatch("solve_least_squares: " + a.shape() + " vs " + b.shape());
  const std::size_t m = a.rows(), n = a.cols();
  const auto qr = detail::householder_qr(a, true);

  std::size_t rank = 0;
  const std::size_t steps = std::min(m, n);
  const double lead = steps > 0 ? std::abs(qr.r(0, 0)) : 0.0;
  while (rank < steps && std::abs(qr.r(rank, rank)) > tol.rank * lead) ++rank;

  LeastSquaresSolution out{Matrix(n, b.cols()), 0.0, rank};
  if (rank > 0) {
    // R_top (rank x n) = S^T Z^T with Z orthogonal, S upper triangular.
    const Matrix rtop_t = qr.r.block(0, 0, rank, n).transpose();
    const auto z = detail::householder_qr(rtop_t, false);
    const Matrix c = qr.qt * b;
    for (std::size_t col = 0; col < b.cols(); ++col) {
      // Forward substitution: S1^T w = c1 where S1 = z.r[0:rank, 0:rank].
      std::vector<double> w(n, 0.0);
      for (std::size_t i = 0; i < rank; ++i) {
        double s = c(i, col);
        for (std::size_t k = 0; k < i; ++k) s -= z.r(k, i) * w[k];
        w[i] = s / z.r(i, i);
      }
      // y = Z w = z.qt^T w
      for (std::size_t j = 0; j < n; ++j) {
        double y = 0.0;
        for (std::size_t k = 0; k < rank; ++k) y += z.qt(k, j) * w[k];
        out.x(qr.perm[j], col) = y;
      }
    }
  }
  out.residual = (a * out.x - b).frobenius_norm();
  return out;
}

// ---------------------------------------------------------------------------
// Linear matrix equations sum_k L_k X_k R_k = C, solved through row-major
// Kronecker vectorisation: vec(L X R) = (L kron R^T) vec(X).

class LinearMatrixSystem {
 public:
  std::size_t add_unknown(std::size_t rows, std::size_t cols) {
    unknowns_.push_back({rows, cols, total_unknowns_});
    total_unknowns_ += rows * cols;
    return unknowns_.size() - 1;
  }

  std::size_t add_equation(Matrix rhs) {
    equations_.push_back({std::move(rhs), {}});
    return equations_.size() - 1;
  }

  /// Adds left * X_unknown * right to equation `eq`.
  void add_term(std::size_t eq, const Matrix& left, std::size_t unknown, const Matrix& right) {
    const auto& u = unknowns_.at(unknown);
    auto& e = equations_.at(eq);
    if (left.cols() != u.rows || right.rows() != u.cols || left.rows() != e.rhs.rows() ||
        right.cols() != e.rhs.cols()) {
      throw DimensionMismatch("LinearMatrixSystem::add_term: " + left.shape() + " * X(" +
                              std::to_string(u.rows) + "x" + std::to_string(u.cols) + ") * " +
                              right.shape() + " vs rhs " + e.rhs.shape());
    }
    e.terms.push_back({left, unknown, right});
  }

  struct Solution {
    std::vector<Matrix> unknowns;
    std::vector<double> equation_residuals;  // Frobenius, per equation
    double residual = 0.0;                   // max over equations
    std::size_t rank = 0;
  };

  /// Throws NoSolution when the least-squares residual exceeds
  /// `tol.regulation_reject`.
  Solution solve(const Tolerances& tol = default_tolerances()) const {
    std::size_t rows = 0;
    for (const auto& e : equations_) rows += e.rhs.size();
    Matrix big(rows, total_unknowns_);
    Matrix rhs(rows, 1);
    std::size_t offset = 0;
    for (const auto& e : equations_) {
      for (const auto& t : e.terms) {
        const auto& u = unknowns_[t.unknown];
        const Matrix k = kron(t.left, t.right.transpose());
        for (std::size_t r = 0; r < k.rows(); ++r)
          for (std::size_t c = 0; c < k.cols(); ++c) big(offset + r, u.offset + c) += k(r, c);
      }
      for (std::size_t k = 0; k < e.rhs.size(); ++k) rhs(offset + k, 0) = e.rhs[k];
      offset += e.rhs.size();
    }

    const auto ls = solve_least_squares(big, rhs, tol);
    Solution out;
    out.rank = ls.rank;
    for (const auto& u : unknowns_) {
      out.unknowns.push_back(unvec(ls.x.block(u.offset, 0, u.rows * u.cols, 1), u.rows, u.cols));
    }
    out.equation_residuals = residuals(out.unknowns);
    out.residual = out.equation_residuals.empty()
                       ? 0.0
                       : *std::max_element(out.equation_residuals.begin(), out.equation_residuals.end());
    if (!(out.residual <= tol.regulation_reject)) {
      throw NoSolution("linear matrix system has no solution: least-squares residual " +
                           std::to_string(out.residual),
                       out.residual);
    }
    return out;
  }

  /// Residual of each original matrix equation at the given unknowns.
  std::vector<double> residuals(const std::vector<Matrix>& x) const {
    std::vector<double> out;
    for (const auto& e : equations_) {
      Matrix lhs(e.rhs.rows(), e.rhs.cols());
      for (const auto& t : e.terms) lhs += t.left * x.at(t.unknown) * t.right;
      out.push_back((lhs - e.rhs).frobenius_norm());
    }
    return out;
  }

 private:
  struct Unknown {
    std::size_t rows, cols, offset;
  };
  struct Term {
    Matrix left;
    std::size_t unknown;
    Matrix right;
  };
  struct Equation {
    Matrix rhs;
    std::vector<Term> terms;
  };

  std::vector<Unknown> unknowns_;
  std::vector<Equation> equations_;
  std::size_t total_unknowns_ = 0;
};

inline LinearMatrixSystem::Solution solve_sylvester_general(
    const LinearMatrixSystem& system, const Tolerances& tol = default_tolerances()) {
  return system.solve(tol);
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition (cyclic Jacobi)

struct EigenDecomposition {
  std::vector<double> values;  // ascending
  Matrix vectors;              // columns are eigenvectors
};

inline EigenDecomposition eig_sym(const Matrix& s, const Tolerances& tol = default_tolerances()) {
  if (!s.is_square()) throw DimensionMismatch("eig_sym: matrix not square " + s.shape());
  if ((s - s.transpose()).max_abs() > tol.symmetry) {
    throw NotSymmetric("eig_sym: asymmetry " + std::to_string((s - s.transpose()).max_abs()));
  }
  const std::size_t n = s.rows();
  Matrix a = symmetrize(s);
  Matrix v = Matrix::identity(n);

  auto off_norm = [&] {
    double o = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) o += a(p, q) * a(p, q);
    return std::sqrt(o);
  };
  const double scale = std::max(a.frobenius_norm(), 1e-300);

  for (int sweep = 0; sweep < tol.jacobi_max_sweeps && off_norm() > 1e-15 * scale; ++sweep) {
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

inline double lambda_min(const Matrix& s) { return eig_sym(s).values.front(); }
inline double lambda_max(const Matrix& s) { return eig_sym(s).values.back(); }

/// Largest singular value by power iteration on a^T a.
inline double norm2(const Matrix& a, const Tolerances& tol = default_tolerances()) {
  if (a.empty()) return 0.0;
  const Matrix g = a.transpose() * a;
  const std::size_t n = g.rows();
  // Deterministic start with no special alignment to coordinate axes.
  Vector x(n, 1);
  for (std::size_t k = 0; k < n; ++k) x[k] = 1.0 + 0.1 * static_cast<double>(k);
  x *= 1.0 / norm(x);
  double lambda = 0.0;
  for (int it = 0; it < tol.norm2_max_iterations; ++it) {
    Vector y = g * x;
    const double ny = norm(y);
    if (ny == 0.0) return 0.0;
    const double next = dot(x, y);
    y *= 1.0 / ny;
    x = std::move(y);
    if (std::abs(next - lambda) <= tol.norm2_relative * std::abs(next)) {
      lambda = next;
      return std::sqrt(std::max(lambda, 0.0));
    }
    lambda = next;
  }
  // Close top singular values converge slowly; the symmetric solver is exact.
  return std::sqrt(std::max(lambda_max(symmetrize(g)), 0.0));
}

/// Right inverse b^T (b b^T)^{-1} of a row-full-rank b.
inline Matrix pinv_right(const Matrix& b, const Tolerances& tol = default_tolerances()) {
  if (b.rows() > b.cols()) {
    throw RankDeficient("pinv_right: " + b.shape() + " has more rows than columns");
  }
  const Matrix g = symmetrize(b * b.transpose());
  const auto eig = eig_sym(g, tol);
  if (!(eig.values.front() > tol.rank * std::max(eig.values.back(), 1e-300))) {
    throw RankDeficient("pinv_right: b b^T numerically singular (lambda_min " +
                        std::to_string(eig.values.front()) + ")");
  }
  try {
    return b.transpose() * solve_linear(g, Matrix::identity(b.rows()), tol);
  } catch (const SingularMatrix& e) {
    throw RankDeficient(std::string("pinv_right: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Lyapunov and Riccati

/// Solves a^T p + p a = -q for symmetric q by Kronecker vectorisation.
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& q,
                             const Tolerances& tol = default_tolerances()) {
  if (!a.is_square() || q.rows() != a.rows() || q.cols() != a.cols())
    throw DimensionMismatch("solve_lyapunov: " + a.shape() + " vs " + q.shape());
  const std::size_t n = a.rows();
  const Matrix at = a.transpose();
  const Matrix id = Matrix::identity(n);
  const Matrix big = kron(at, id) + kron(id, at);
  return symmetrize(unvec(solve_linear(big, -vec(q), tol), n, n));
}

/// a^T p + p a - p b b^T p + I.
inline Matrix care_residual(const Matrix& a, const Matrix& b, const Matrix& p) {
  const Matrix pb = p * b;
  return a.transpose() * p + p * a - pb * pb.transpose() + Matrix::identity(a.rows());
}

/// True iff every eigenvalue of a has negative real part, tested through
/// positive definiteness of the Lyapunov solution with q = I.
inline bool is_hurwitz(const Matrix& a, const Tolerances& tol = default_tolerances()) {
  try {
    const Matrix p = solve_lyapunov(a, Matrix::identity(a.rows()), tol);
    return eig_sym(p, tol).values.front() > 0.0;
  } catch (const SingularMatrix&) {
    return false;
  }
}

namespace detail {

struct NewtonOutcome {
  Matrix p;
  double residual;
  bool ok;
};

// Newton-Kleinman on (a, b) from a stabilising gain k (a - b k Hurwitz).
inline NewtonOutcome newton_kleinman(const Matrix& a, const Matrix& b, Matrix k, int& budget,
                                     const Tolerances& tol) {
  const std::size_t n = a.rows();
  const double scale = 1.0 + a.frobenius_norm();
  NewtonOutcome best{Matrix(n, n), INFINITY, false};
  int stalls = 0;
  while (budget-- > 0) {
    Matrix p;
    try {
      p = solve_lyapunov(a - b * k, Matrix::identity(n) + k.transpose() * k, tol);
    } catch (const SingularMatrix&) {
      return best;
    }
    const double r = care_residual(a, b, p).frobenius_norm();
    if (!std::isfinite(r)) return best;
    if (r < best.residual) {
      best = {p, r, true};
      stalls = 0;
    } else if (++stalls >= 3) {
      break;
    }
    if (r <= 1e-14 * scale * scale) break;
    k = b.transpose() * p;
  }
  return best;
}

// Integrates dP/dt = a^T P + P a - P b b^T P + I from P = 0 (RK4) until the
// residual stops improving; converges to the stabilising solution.
inline Matrix riccati_flow(const Matrix& a, const Matrix& b, double target) {
  const std::size_t n = a.rows();
  const double h = 0.05 / (1.0 + a.frobenius_norm() + (b * b.transpose()).frobenius_norm());
  Matrix p(n, n);
  for (long step = 0; step < 2000000; ++step) {
    const Matrix k1 = care_residual(a, b, p);
    if (k1.frobenius_norm() <= target) break;
    const Matrix k2 = care_residual(a, b, p + (0.5 * h) * k1);
    const Matrix k3 = care_residual(a, b, p + (0.5 * h) * k2);
    const Matrix k4 = care_residual(a, b, p + h * k3);
    p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    p = symmetrize(p);
    if (!p.all_finite()) break;
  }
  return p;
}

}  // namespace detail

/// Stabilising solution of a^T P + P a - P b b^T P + I = 0.
///
/// Newton-Kleinman with a shift continuation for the initial gain: a - sI is
/// Hurwitz for s = 1 + max row sum |a|, so K = 0 starts the shifted problem;
/// the shift is then walked to zero, halving the step whenever the previous
/// gain fails to stabilise the next shifted system. If that cannot reach
/// s = 0 the Riccati flow is integrated to steady state and polished.
inline Matrix solve_care(const Matrix& a, const Matrix& b, const Tolerances& tol = default_tolerances()) {
  if (!a.is_square()) throw DimensionMismatch("solve_care: a not square " + a.shape());
  if (b.rows() != a.rows()) throw DimensionMismatch("solve_care: " + a.shape() + " vs " + b.shape());
  const std::size_t n = a.rows();
  const Matrix id = Matrix::identity(n);

  double sigma = 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += std::abs(a(r, c));
    sigma = std::max(sigma, 1.0 + s);
  }

  int budget = tol.care_max_iterations;
  double shift = sigma;
  Matrix k(b.cols(), n);
  bool reached = false;
  detail::NewtonOutcome outcome{Matrix(n, n), INFINITY, false};

  int local = budget;
  outcome = detail::newton_kleinman(a - shift * id, b, k, local, tol);
  budget = local;
  if (outcome.ok) {
    k = b.transpose() * outcome.p;
    double step = shift;
    while (budget > 0 && step > 1e-12 * sigma) {
      const double next = std::max(0.0, shift - step);
      if (!is_hurwitz(a - next * id - b * k, tol)) {
        step *= 0.5;
        continue;
      }
      outcome = detail::newton_kleinman(a - next * id, b, k, budget, tol);
      if (!outcome.ok) break;
      shift = next;
      k = b.transpose() * outcome.p;
      if (shift == 0.0) {
        reached = true;
        break;
      }
    }
  }

  // A residual from a shifted problem says nothing about the true one.
  if (!reached) outcome = {Matrix(n, n), INFINITY, false};

  if (!reached || outcome.residual > tol.care_residual) {
    Matrix p = detail::riccati_flow(a, b, 1e-6);
    k = b.transpose() * p;
    if (is_hurwitz(a - b * k, tol)) {
      int polish = tol.care_max_iterations;
      const auto polished = detail::newton_kleinman(a, b, k, polish, tol);
      if (polished.ok && polished.residual < outcome.residual) outcome = polished;
    }
  }

  if (!outcome.ok || !(outcome.residual <= tol.care_residual)) {
    throw CareDiverged("solve_care: residual " + std::to_string(outcome.residual) +
                       " above tolerance after " + std::to_string(tol.care_max_iterations) +
                       " iterations");
  }
  Matrix p = symmetrize(outcome.p);
  if (eig_sym(p, tol).values.front() <= tol.positive_floor) {
    throw CareDiverged("solve_care: solution not positive definite");
  }
  return p;
}

}  // namespace ptf
