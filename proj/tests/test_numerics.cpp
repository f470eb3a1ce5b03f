#include <gtest/gtest.h>

#include <cmath>

#include "mgdl/numerics.hpp"
#include "mgdl/rng.hpp"

using namespace mgdl;

namespace {

Mat random_mat(std::size_t r, std::size_t c, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Mat m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

Mat random_sym(std::size_t n, std::uint64_t seed) {
  Mat a = random_mat(n, n, seed);
  return 0.5 * (a + a.transpose());
}

// Gram-Schmidt on a Gaussian matrix.
Mat random_orthogonal(std::size_t n, std::uint64_t seed) {
  Mat q = random_mat(n, n, seed);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) d += q(i, j) * q(i, k);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= d * q(i, k);
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += q(i, j) * q(i, j);
    nrm = std::sqrt(nrm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= nrm;
  }
  return q;
}

double max_abs_diff(const Mat& a, const Mat& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// column-major vec
Vector vec(const Mat& m) {
  Vector v;
  for (std::size_t c = 0; c < m.cols(); ++c)
    for (std::size_t r = 0; r < m.rows(); ++r) v.push_back(m(r, c));
  return v;
}

}  // namespace

TEST(Kron, IdentityTimesIdentity) {
  const Mat k = kron(Mat::identity(2), Mat::identity(2));
  EXPECT_EQ(max_abs_diff(k, Mat::identity(4)), 0.0);
}

TEST(Kron, RowTimesColumnByHand) {
  const Mat k = kron(Mat{{1, 2}}, Mat{{3}, {4}});
  ASSERT_EQ(k.rows(), 2u);
  ASSERT_EQ(k.cols(), 2u);
  EXPECT_EQ(max_abs_diff(k, Mat{{3, 6}, {4, 8}}), 0.0);
}

TEST(Kron, ZeroFactorGivesZeroOfProductShape) {
  const Mat k = kron(random_mat(2, 3, 1), Mat(4, 5));
  EXPECT_EQ(k.rows(), 8u);
  EXPECT_EQ(k.cols(), 15u);
  EXPECT_EQ(k.frobenius_norm(), 0.0);
}

TEST(Kron, OversizeRejected) {
  EXPECT_THROW(kron(Mat(1 << 15, 1), Mat(1 << 14, 1)), std::length_error);
}

TEST(Kron, Associative) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Mat a = random_mat(2, 3, 10 + s), b = random_mat(3, 2, 20 + s), c = random_mat(2, 2, 30 + s);
    EXPECT_LE(max_abs_diff(kron(kron(a, b), c), kron(a, kron(b, c))), 1e-12);
  }
}

TEST(KronMatvec, IdentityIsNoOp) {
  const Vector v{1, -2, 3, 0.5};
  EXPECT_EQ(kron_matvec(Mat::identity(2), Mat::identity(2), v), v);
}

TEST(KronMatvec, MatchesMaterializedProduct) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Mat a = random_mat(2, 2, s), b = random_mat(2, 2, 100 + s), v = random_mat(2, 2, 200 + s);
    const Vector want = matvec(kron(a, b), vec(v));
    const Vector got = kron_matvec(a, b, vec(v));
    for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-13);
  }
  // rectangular factors
  const Mat a = random_mat(3, 2, 7), b = random_mat(4, 5, 8), v = random_mat(5, 2, 9);
  const Vector want = matvec(kron(a, b), vec(v));
  const Vector got = kron_matvec(a, b, vec(v));
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
}

TEST(KronMatvec, ZeroFactor) {
  const Vector got = kron_matvec(Mat(2, 2), random_mat(2, 2, 3), Vector{1, 2, 3, 4});
  for (double g : got) EXPECT_EQ(g, 0.0);
}

TEST(KronMatvec, ShapeMismatchThrows) {
  EXPECT_THROW(kron_matvec(Mat::identity(2), Mat::identity(2), Vector{1, 2, 3}), std::invalid_argument);
}

TEST(SymEig, DiagonalSorted) {
  for (auto be : {EigenBackend::Jacobi, EigenBackend::Lapack}) {
    const Vector d{3, 1, 2};
    const auto r = sym_eig(Mat::diagonal(d), false, be);
    EXPECT_EQ(r.values, (Vector{1, 2, 3}));
  }
}

TEST(SymEig, TwoByTwoByHand) {
  // det([[2-λ,1],[1,2-λ]]) = (2-λ)² - 1 -> λ ∈ {1, 3}
  const auto r = sym_eig(Mat{{2, 1}, {1, 2}});
  EXPECT_NEAR(r.values[0], 1.0, 1e-14);
  EXPECT_NEAR(r.values[1], 3.0, 1e-14);
}

TEST(SymEig, SimilarityInvariance) {
  const Mat s = random_sym(8, 42);
  const Mat q = random_orthogonal(8, 43);
  const Mat t = matmul(matmul(q, s), q.transpose());
  for (auto be : {EigenBackend::Jacobi, EigenBackend::Lapack}) {
    const auto a = sym_eig(s, false, be), b = sym_eig(t, false, be);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
  }
}

TEST(SymEig, WithinGershgorin) {
  const Mat s = random_sym(12, 5);
  const auto [lo, hi] = gershgorin_bounds(s);
  for (double v : sym_eig(s).values) {
    EXPECT_GE(v, lo - 1e-12);
    EXPECT_LE(v, hi + 1e-12);
  }
}

TEST(SymEig, ReconstructionAndOrthonormality) {
  for (auto be : {EigenBackend::Jacobi, EigenBackend::Lapack}) {
    const Mat s = random_sym(15, 77);
    const auto r = sym_eig(s, true, be);
    ASSERT_TRUE(r.vectors.has_value());
    const Mat& q = *r.vectors;
    const Mat qtq = matmul(q.transpose(), q);
    EXPECT_LE(max_abs_diff(qtq, Mat::identity(15)), 1e-8);
    const Mat rec = matmul(matmul(q, Mat::diagonal(r.values)), q.transpose());
    EXPECT_LE((rec - s).frobenius_norm(), 1e-8 * s.frobenius_norm());
  }
}

TEST(SymEig, ShiftInvariance) {
  const Mat s = random_sym(10, 9);
  const double c = 2.75;
  const auto a = sym_eig(s), b = sym_eig(s + c * Mat::identity(10));
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(b.values[i], a.values[i] + c, 1e-10);
}

TEST(SymEig, BackendsAgree) {
  const Mat s = random_sym(30, 11);
  const auto a = sym_eig(s, false, EigenBackend::Jacobi), b = sym_eig(s, false, EigenBackend::Lapack);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-11);
}

TEST(SymEig, AsymmetricInputIsSymmetrized) {
  const auto r = sym_eig(Mat{{2, 0}, {2, 2}});  // (S+Sᵀ)/2 = [[2,1],[1,2]]
  EXPECT_NEAR(r.values[0], 1.0, 1e-14);
  EXPECT_NEAR(r.values[1], 3.0, 1e-14);
}

TEST(SymEig, SweepCapSignalsNonConvergence) {
  JacobiOptions opt;
  opt.max_sweeps = 1;
  opt.rel_tol = 1e-300;
  EXPECT_THROW(sym_eig(random_sym(20, 3), false, EigenBackend::Jacobi, opt), ConvergenceError);
}

TEST(SymEig, RejectsNonSquareAndNonFinite) {
  EXPECT_THROW(sym_eig(Mat(2, 3)), std::invalid_argument);
  EXPECT_THROW(sym_eig(Mat{{1, NAN}, {NAN, 1}}), std::invalid_argument);
}

TEST(SpectralNorm, DiagonalAndIdentity) {
  EXPECT_EQ(spectral_norm(Mat::diagonal(Vector{-4, 2})), 4.0);
  EXPECT_NEAR(spectral_norm(Mat::identity(5)), 1.0, 1e-15);
}

TEST(SpectralNorm, MatchesFullEigensolve) {
  const Mat s = random_sym(3, 21);
  const auto r = sym_eig(s);
  EXPECT_NEAR(spectral_norm(s), std::max(std::abs(r.values.front()), std::abs(r.values.back())), 1e-14);
}
