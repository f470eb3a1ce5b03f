// Dense linear algebra used throughout the library: a row-major matrix,
// Kronecker helpers, and symmetric eigensolvers.
//
// sym_eig() defaults to cyclic Jacobi rotations for small matrices. Hessians
// of the larger presets (a few thousand parameters) are routed to LAPACK's
// divide-and-conquer driver, which is orders of magnitude faster there; the
// Jacobi path stays available explicitly and is cross-checked against it in
// the tests. Large dense products (Hessian assembly) also go through BLAS.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <cblas.h>
#include <lapacke.h>

namespace mgdl {

using Vector = std::vector<double>;

/// Largest matrix (in entries) any routine here will allocate.
inline constexpr std::size_t kMaxMatrixEntries = std::size_t{1} << 28;

struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void log_warning(const std::string& msg) { std::cerr << "[mgdl] warning: " << msg << '\n'; }

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols) {
    check_size(rows, cols);
    data_.assign(rows * cols, fill);
  }
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) throw std::invalid_argument("Mat: data length != rows*cols");
  }
  /// Row-major construction from nested initializer lists (tests, small fixtures).
  Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw std::invalid_argument("Mat: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat diagonal(std::span<const double> d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool square() const { return rows_ == cols_; }
  /// Reshape keeping the allocation where possible; contents are unspecified.
  void resize(std::size_t rows, std::size_t cols) {
    check_size(rows, cols);
    rows_ = rows;
    cols_ = cols;
    data_.resize(rows * cols);
  }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Mat transpose() const {
    Mat t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Mat& operator+=(const Mat& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += o.data_[k];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    require_same_shape(o);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= o.data_[k];
    return *this;
  }
  Mat& operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(Mat a, double s) { return a *= s; }
  friend Mat operator*(double s, Mat a) { return a *= s; }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }
  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Copies the upper triangle onto the lower one.
  void mirror_upper() {
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i + 1; j < cols_; ++j) (*this)(j, i) = (*this)(i, j);
  }

 private:
  static void check_size(std::size_t rows, std::size_t cols) {
    if (cols != 0 && rows > kMaxMatrixEntries / cols)
      throw std::length_error("Mat: " + std::to_string(rows) + "x" + std::to_string(cols) +
                              " exceeds the configured maximum size");
  }
  void require_same_shape(const Mat& o) const {
    if (o.rows_ != rows_ || o.cols_ != cols_) throw std::invalid_argument("Mat: shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Vector helpers

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

/// y += alpha * x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

// ---------------------------------------------------------------------------
// Products

inline Vector matvec(const Mat& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw std::invalid_argument("matvec: shape mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimensions differ");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

/// H(upper triangle) += scale * J^T J, where J is row-major (samples x params).
/// Only entries with column >= row are written; call Mat::mirror_upper() after.
inline void add_gram_upper(const Mat& jac, double scale, Mat& h) {
  const std::size_t m = jac.cols();
  if (h.rows() != m || h.cols() != m) throw std::invalid_argument("add_gram_upper: shape mismatch");
  if (m == 0 || jac.rows() == 0) return;
  cblas_dsyrk(CblasRowMajor, CblasUpper, CblasTrans, static_cast<int>(m), static_cast<int>(jac.rows()), scale,
              jac.data().data(), static_cast<int>(m), 1.0, h.data().data(), static_cast<int>(m));
}

/// Row-major C = alpha op(A) op(B) + beta C (thin cblas_dgemm wrapper).
inline void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
                 const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta, double* c,
                 std::size_t ldc) {
  if (m == 0 || n == 0) return;
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans, trans_b ? CblasTrans : CblasNoTrans,
              static_cast<int>(m), static_cast<int>(n), static_cast<int>(k), alpha, a, static_cast<int>(lda), b,
              static_cast<int>(ldb), beta, c, static_cast<int>(ldc));
}

/// C = A * B^T for row-major A (m x k) and B (n x k).
inline Mat matmul_bt(const Mat& a, const Mat& b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_bt: inner dimensions differ");
  Mat c(a.rows(), b.rows());
  if (c.size() == 0 || a.cols() == 0) return c;
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(a.rows()), static_cast<int>(b.rows()),
              static_cast<int>(a.cols()), 1.0, a.data().data(), static_cast<int>(a.cols()), b.data().data(),
              static_cast<int>(b.cols()), 0.0, c.data().data(), static_cast<int>(c.cols()));
  return c;
}

// ---------------------------------------------------------------------------
// Kronecker products

/// A ⊗ B as the (rA*rB) x (cA*cB) block matrix [a_ij B].
inline Mat kron(const Mat& a, const Mat& b) {
  const std::size_t rows = a.rows() * b.rows();
  const std::size_t cols = a.cols() * b.cols();
  Mat k(rows, cols);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return k;
}

/// Kronecker product of two column vectors, (a ⊗ b)[i*|b| + p] = a_i b_p.
inline Vector kron(std::span<const double> a, std::span<const double> b) {
  Vector k(a.size() * b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t p = 0; p < b.size(); ++p) k[i * b.size() + p] = a[i] * b[p];
  return k;
}

/// (A ⊗ B) vec(V) computed as vec(B V A^T) without forming A ⊗ B.
/// vec stacks columns; V is cols(B) x cols(A).
inline Vector kron_matvec(const Mat& a, const Mat& b, std::span<const double> vec_v) {
  const std::size_t vr = b.cols();
  const std::size_t vc = a.cols();
  if (vec_v.size() != vr * vc) throw std::invalid_argument("kron_matvec: vec(V) has wrong length");
  // T = B V  (rows(B) x cols(A)), column-major in a flat buffer.
  const std::size_t br = b.rows();
  Vector t(br * vc, 0.0);
  for (std::size_t c = 0; c < vc; ++c)
    for (std::size_t k = 0; k < vr; ++k) {
      const double v = vec_v[c * vr + k];
      if (v == 0.0) continue;
      for (std::size_t p = 0; p < br; ++p) t[c * br + p] += b(p, k) * v;
    }
  // Y = T A^T  (rows(B) x rows(A)), returned column-major.
  Vector y(br * a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t c = 0; c < vc; ++c) {
      const double aic = a(i, c);
      if (aic == 0.0) continue;
      for (std::size_t p = 0; p < br; ++p) y[i * br + p] += t[c * br + p] * aic;
    }
  return y;
}

// ---------------------------------------------------------------------------
// Symmetric eigenproblems

struct EigenResult {
  Vector values;               ///< ascending
  std::optional<Mat> vectors;  ///< columns are eigenvectors, same order as values
};

enum class EigenBackend { Auto, Jacobi, Lapack };

struct JacobiOptions {
  int max_sweeps = 100;
  double rel_tol = 1e-11;  ///< off-diagonal Frobenius norm relative to ||S||_F
};

/// Matrices up to this order go through Jacobi when the backend is Auto.
inline constexpr std::size_t kJacobiAutoLimit = 160;

namespace detail {

inline Mat symmetrized(const Mat& s) {
  if (!s.square()) throw std::invalid_argument("sym_eig: matrix is not square");
  Mat a(s.rows(), s.cols());
  double asym = 0.0;
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) {
      a(i, j) = 0.5 * (s(i, j) + s(j, i));
      const double d = s(i, j) - s(j, i);
      asym += d * d;
    }
  const double fro = s.frobenius_norm();
  if (fro > 0.0 && std::sqrt(asym) > 1e-6 * fro)
    log_warning("sym_eig: input asymmetry " + std::to_string(std::sqrt(asym) / fro) +
                " (relative) exceeds 1e-6; symmetrizing");
  if (!a.all_finite()) throw std::invalid_argument("sym_eig: matrix has non-finite entries");
  return a;
}

inline void sort_ascending(EigenResult& r) {
  const std::size_t n = r.values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return r.values[x] < r.values[y]; });
  Vector vals(n);
  for (std::size_t k = 0; k < n; ++k) vals[k] = r.values[idx[k]];
  r.values = std::move(vals);
  if (r.vectors) {
    Mat v(n, n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) v(i, k) = (*r.vectors)(i, idx[k]);
    r.vectors = std::move(v);
  }
}

inline EigenResult jacobi(Mat a, bool want_vectors, const JacobiOptions& opt) {
  const std::size_t n = a.rows();
  EigenResult out;
  std::optional<Mat> v;
  if (want_vectors) v = Mat::identity(n);
  const double scale = a.frobenius_norm();
  const double tol = opt.rel_tol * scale;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) s += a(p, q) * a(p, q);
    return std::sqrt(2.0 * s);
  };

  bool converged = scale == 0.0 || off_norm() <= tol;
  for (int sweep = 0; sweep < opt.max_sweeps && !converged; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        a(p, p) -= t * apq;
        a(q, q) += t * apq;
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a(r, p);
          const double arq = a(r, q);
          const double np = c * arp - s * arq;
          const double nq = s * arp + c * arq;
          a(r, p) = a(p, r) = np;
          a(r, q) = a(q, r) = nq;
        }
        if (v) {
          Mat& vm = *v;
          for (std::size_t r = 0; r < n; ++r) {
            const double vrp = vm(r, p);
            const double vrq = vm(r, q);
            vm(r, p) = c * vrp - s * vrq;
            vm(r, q) = s * vrp + c * vrq;
          }
        }
      }
    }
    converged = off_norm() <= tol;
  }
  if (!converged)
    throw ConvergenceError("sym_eig: Jacobi did not converge in " + std::to_string(opt.max_sweeps) + " sweeps");

  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  out.vectors = std::move(v);
  sort_ascending(out);
  return out;
}

inline EigenResult lapack(Mat a, bool want_vectors) {
  const auto n = static_cast<lapack_int>(a.rows());
  EigenResult out;
  out.values.resize(a.rows());
  if (n == 0) return out;
  const lapack_int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, want_vectors ? 'V' : 'N', 'U', n, a.data().data(), n,
                                         out.values.data());
  if (info != 0) throw ConvergenceError("sym_eig: LAPACK dsyevd failed with info=" + std::to_string(info));
  if (want_vectors) out.vectors = std::move(a);  // dsyevd leaves eigenvectors in the columns
  return out;
}

}  // namespace detail

/// Eigen-decomposition of (S + S^T)/2. Eigenvalues come back ascending.
inline EigenResult sym_eig(const Mat& s, bool want_vectors = false, EigenBackend backend = EigenBackend::Auto,
                           const JacobiOptions& opt = {}) {
  Mat a = detail::symmetrized(s);
  if (backend == EigenBackend::Auto)
    backend = a.rows() <= kJacobiAutoLimit ? EigenBackend::Jacobi : EigenBackend::Lapack;
  return backend == EigenBackend::Jacobi ? detail::jacobi(std::move(a), want_vectors, opt)
                                         : detail::lapack(std::move(a), want_vectors);
}

/// max |eigenvalue| of a symmetric matrix.
inline double spectral_norm(const Mat& s, EigenBackend backend = EigenBackend::Auto) {
  const EigenResult r = sym_eig(s, false, backend);
  if (r.values.empty()) return 0.0;
  return std::max(std::abs(r.values.front()), std::abs(r.values.back()));
}

/// Gershgorin bound: every eigenvalue of symmetric S lies in [lo, hi].
inline std::pair<double, double> gershgorin_bounds(const Mat& s) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double radius = 0.0;
    for (std::size_t j = 0; j < s.cols(); ++j)
      if (j != i) radius += std::abs(s(i, j));
    lo = std::min(lo, s(i, i) - radius);
    hi = std::max(hi, s(i, i) + radius);
  }
  return {lo, hi};
}

}  // namespace mgdl
