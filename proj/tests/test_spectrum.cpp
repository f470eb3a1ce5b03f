#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "mgdl/spectrum.hpp"

using namespace mgdl;

namespace {

Mat diag(std::initializer_list<double> d) { return Mat::diagonal(Vector(d)); }

Mat random_psd(std::size_t n, SplitMix64& rng) {
  Mat b(n, n);
  for (double& v : b.data()) v = rng.normal();
  return matmul(b.transpose(), b);
}

// Realizable 1h softplus problem: targets come from `teacher`, so the teacher
// is a global minimum with a positive definite Hessian for generic data.
struct Teacher {
  Arch arch;
  ParamVec teacher;
  Dataset data;
};

Teacher softplus_teacher(std::size_t width, std::size_t n, std::uint64_t seed) {
  Teacher t;
  t.arch = make_arch(1, width, 1);
  t.arch.activation = Activation::softplus(1.0);
  SplitMix64 rng(seed);
  t.teacher = fx::random_params(t.arch, rng);
  t.data = Dataset{Mat(n, 1), Mat(n, 1)};
  for (std::size_t i = 0; i < n; ++i) {
    t.data.inputs(i, 0) = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    t.data.targets(i, 0) = forward(t.arch, t.teacher, std::span<const double>(t.data.inputs.row(i), 1))[0];
  }
  return t;
}

}  // namespace

TEST(IterationMatrix, Basics) {
  const Mat h = diag({1.0, 2.0, 3.0});
  EXPECT_EQ(iteration_matrix(h, 0.0).data(), Mat::identity(3).data());
  const Mat half = iteration_matrix(Mat::identity(4), 0.5);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(half(i, j), i == j ? 0.5 : 0.0);
  const Vector ev = sym_eig(iteration_matrix(h, 0.1)).values;
  EXPECT_NEAR(ev[0], 0.7, 1e-15);
  EXPECT_NEAR(ev[1], 0.8, 1e-15);
  EXPECT_NEAR(ev[2], 0.9, 1e-15);
  EXPECT_THROW(iteration_matrix(Mat(2, 3), 0.1), std::invalid_argument);
}

TEST(IterationMatrix, SpectralMapping) {
  SplitMix64 rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    const Mat h = random_psd(12, rng);
    const double eta = 0.3 / spectral_norm(h);
    const Vector eh = sym_eig(h).values;
    const Vector ea = sym_eig(iteration_matrix(h, eta)).values;
    // A's ascending order reverses H's
    for (std::size_t i = 0; i < eh.size(); ++i) EXPECT_NEAR(ea[i], 1.0 - eta * eh[eh.size() - 1 - i], 1e-9);
  }
}

TEST(AlphaTau, DirectFormula) {
  SpectrumTracker tr(0.1);
  tr.record(0, diag({2.0}), 1.0);
  tr.record(5, diag({2.0}), 0.5);
  const AlphaTau at = estimate_alpha_tau(tr.trace());
  EXPECT_NEAR(at.alpha_hat, 2.0, 1e-14);
  EXPECT_NEAR(at.tau_hat, 0.8, 1e-14);
  EXPECT_THROW(estimate_alpha_tau(SpectrumTrace{}), std::invalid_argument);
}

TEST(AlphaTau, ZeroStepHasUnitTau) {
  SpectrumTracker tr(0.0);
  tr.record(0, diag({3.0, 0.5}), 1.0);
  EXPECT_EQ(tr.trace().tau_hat(), 1.0);
  EXPECT_NEAR(tr.trace().alpha_hat(), 3.0, 1e-14);
}

TEST(AlphaTau, TauDominatesMappedAlpha) {
  SplitMix64 rng(8);
  for (double eta : {0.01, 0.1, 0.5, 1.5}) {
    SpectrumTracker tr(eta);
    std::vector<Mat> hs;
    for (int c = 0; c < 4; ++c) {
      Mat h = random_psd(6, rng);
      h *= 0.25;
      tr.record(static_cast<std::size_t>(c), h, 0.0);
      hs.push_back(h);
    }
    const auto at = estimate_alpha_tau(tr.trace());
    EXPECT_GE(at.tau_hat, std::abs(1.0 - eta * at.alpha_hat) - 1e-12);
    const auto direct = alpha_tau_of(hs, eta);
    EXPECT_NEAR(direct.alpha_hat, at.alpha_hat, 1e-9 * at.alpha_hat);
    EXPECT_NEAR(direct.tau_hat, at.tau_hat, 1e-9);
  }
}

TEST(TrackSpectrum, QuadraticIsConstant) {
  const QuadraticObjective q(diag({1.0, 2.0, 3.0}), Vector{1.0, 0.0, -1.0});
  TrainConfig cfg;
  cfg.eta = 0.1;
  cfg.epochs = 60;
  cfg.checkpoint_every = 10;
  const SpectrumRun run = track_spectrum(q, Vector{5.0, -2.0, 1.0}, cfg, 3);
  ASSERT_EQ(run.spectrum.records.size(), 7u);
  for (const auto& r : run.spectrum.records) {
    EXPECT_EQ(r.smallest, run.spectrum.records.front().smallest);
    EXPECT_EQ(r.largest, run.spectrum.records.front().largest);
    EXPECT_FALSE(r.failed);
  }
  EXPECT_NEAR(run.spectrum.records[0].smallest[0], 0.7, 1e-15);
  EXPECT_NEAR(run.spectrum.records[0].largest[0], 0.9, 1e-15);
}

TEST(TrackSpectrum, BelowThresholdStaysInUnitInterval) {
  SplitMix64 rng(21);
  for (int rep = 0; rep < 5; ++rep) {
    const QuadraticObjective q(random_psd(8, rng));
    TrainConfig cfg;
    cfg.eta = 1.9 / spectral_norm(q.s);
    cfg.epochs = 40;
    const SpectrumRun run = track_spectrum(q, Vector(8, 1.0), cfg, 8);
    EXPECT_GT(run.spectrum.min_eigenvalue(), -1.0);
    EXPECT_LE(run.spectrum.max_eigenvalue(), 1.0 + 1e-12);
    EXPECT_LT(run.spectrum.tau_hat(), 1.0 + 1e-12);
  }
}

// The output neuron of a net with a frozen ReLU hidden layer sees fixed
// features, so its activation pattern never changes and H is constant.
TEST(TrackSpectrum, FrozenPatternIsConstant) {
  Arch a = make_arch(1, 1, 1, 1);
  SplitMix64 rng(4);
  const Dataset d = fx::random_dataset(10, 1, rng);
  ParamVec p = init_params(a, 9);
  p.w(0, 0, 0) = 1.0;
  p.b(0, 0) = 0.5;
  const MseObjective obj(a, d);
  TrainConfig cfg;
  cfg.eta = 0.2;
  cfg.epochs = 200;
  cfg.checkpoint_every = 20;
  const SpectrumRun run = track_spectrum(obj, p.data(), cfg, 4);
  ASSERT_FALSE(run.train.diverged);
  EXPECT_LT(run.train.final_loss, run.train.losses.front());
  for (const auto& r : run.spectrum.records)
    for (std::size_t i = 0; i < r.smallest.size(); ++i)
      EXPECT_NEAR(r.smallest[i], run.spectrum.records.front().smallest[i], 1e-13);
}

TEST(TrackSpectrum, RejectsAdam) {
  const QuadraticObjective q(diag({1.0}));
  TrainConfig cfg;
  cfg.optimizer = Optimizer::Adam;
  EXPECT_THROW(track_spectrum(q, Vector{1.0}, cfg), std::invalid_argument);
}

TEST(Surrogate, QuadraticMatchesGd) {
  SplitMix64 rng(5);
  for (int rep = 0; rep < 3; ++rep) {
    Vector c(6);
    for (double& v : c) v = rng.normal();
    const QuadraticObjective q(random_psd(6, rng), c);
    Vector w0(6);
    for (double& v : w0) v = rng.normal();
    const JointRun jr = run_joint(q, w0, 1.0 / spectral_norm(q.s), 300);
    ASSERT_FALSE(jr.diverged);
    for (double g : jr.gaps) EXPECT_LE(g, 1e-12);
    const LimitReport lr = compare_limits(jr, 1e-3);
    EXPECT_TRUE(lr.applicable);
    EXPECT_LE(lr.gap, 1e-12);
  }
}

TEST(Surrogate, ZeroStepIsConstant) {
  const QuadraticObjective q(diag({2.0, 1.0}));
  SurrogateState s{Vector{1.0, 2.0}, Vector{0.5, 0.5}, Vector{1.0, 0.5}, diag({2.0, 1.0})};
  EXPECT_EQ(linearized_step(s, 0.0), (Vector{1.0, 2.0}));
  const JointRun jr = run_joint(q, Vector{3.0, -1.0}, 0.0, 10);
  EXPECT_EQ(jr.w_surrogate, (Vector{3.0, -1.0}));
  EXPECT_EQ(jr.w_full, jr.w_surrogate);
}

TEST(Surrogate, RejectsBadState) {
  SurrogateState s{Vector{1.0}, Vector{1.0, 2.0}, Vector{1.0}, diag({1.0})};
  EXPECT_THROW(linearized_step(s, 0.1), std::invalid_argument);
  SurrogateState big{Vector{1e308}, Vector{0.0}, Vector{0.0}, diag({-1e10})};
  EXPECT_THROW(linearized_step(big, 1.0), NonFiniteError);
}

TEST(Surrogate, TinyNetGapVanishes) {
  const Teacher t = softplus_teacher(2, 12, 17);
  const MseObjective obj(t.arch, t.data);
  const double eta = 1.0 / spectral_norm(obj.hessian(t.teacher.data()));
  Vector w0 = t.teacher.data();
  SplitMix64 rng(2);
  for (double& v : w0) v += 1e-5 * rng.normal();
  const JointRun jr = run_joint(obj, w0, eta, 3000);
  ASSERT_FALSE(jr.diverged);
  EXPECT_LT(jr.tau_hat, 1.0);
  const LimitReport lr = compare_limits(jr, 1e-3);
  EXPECT_TRUE(lr.applicable);
  EXPECT_LT(lr.gap, 1e-4);
  EXPECT_EQ(lr.gap_series.size(), 3001u);
}

TEST(CompareLimits, DivergedIsInapplicable) {
  const QuadraticObjective q(diag({1.0, 4.0}));
  const JointRun jr = run_joint(q, Vector{1.0, 1.0}, 1.0, 200);
  ASSERT_TRUE(jr.diverged);
  const LimitReport lr = compare_limits(jr, 1e-3);
  EXPECT_FALSE(lr.applicable);
  EXPECT_FALSE(lr.within);
  EXPECT_TRUE(std::isnan(lr.gap));
}
