#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "mgdl/calculus_tv.hpp"

using namespace mgdl;

namespace {

ScalarFn tv_loss_of(const fx::TvTriple& t) {
  return [&t](std::span<const double> w) {
    return tv_loss(t.arch, ParamVec(t.params.layout(), Vector(w.begin(), w.end())), t.u, t.problem);
  };
}

VectorFn tv_grad_of(const fx::TvTriple& t) {
  return [&t](std::span<const double> w) {
    return tv_grad(t.arch, ParamVec(t.params.layout(), Vector(w.begin(), w.end())), t.u, t.problem);
  };
}

ImageProblem small_problem(std::size_t n) {
  ImageProblem pb;
  pb.n = n;
  pb.inputs = coord_grid(n);
  pb.observed = Mat(n, n);
  return pb;
}

}  // namespace

TEST(TvLoss, ConstantFitIsZero) {
  const Arch a = make_arch(2, 4, 1);
  ParamVec p = init_params(a, 1);
  for (std::size_t c = 0; c < 4; ++c) p.w(1, c, 0) = 0.0;
  p.b(1, 0) = 0.7;
  ImageProblem pb = small_problem(3);
  pb.observed = Mat(3, 3, 0.7);
  EXPECT_EQ(tv_loss(a, p, Mat(6, 3), pb), 0.0);
}

TEST(TvLoss, NoPenaltyReducesToFidelity) {
  SplitMix64 rng(2);
  auto t = fx::kink_free_tv(1, 4, 3, 0.0, rng);
  t.problem.lambda = 0.0;
  t.problem.beta = 0.0;
  const Mat img = detail::tv_image(t.arch, t.params, t.problem);
  double want = 0.0;
  for (std::size_t i = 0; i < 9; ++i) {
    const double d = img.data()[i] - t.problem.observed.data()[i];
    want += 0.5 * d * d;
  }
  EXPECT_NEAR(tv_loss(t.arch, t.params, t.u, t.problem), want, 1e-14);
}

TEST(TvLoss, TwoByTwoByHand) {
  ImageProblem pb = small_problem(2);
  pb.observed = Mat{{1, 2}, {3, 5}};
  pb.lambda = 0.5;
  pb.beta = 2.0;
  const Mat img{{1, 1}, {2, 4}};
  // rows 0-1 horizontal, rows 2-3 vertical
  const Mat u{{0, 1}, {0, 1}, {0, 0}, {2, 2}};
  // fidelity: ½(0 + 1 + 1 + 1) = 1.5
  // B img: horizontal [0, 0; 0, 2], vertical [0, 0; 1, 3]
  // u - B img: [0, 1; 0, -1; 0, 0; 1, -1] -> (β/2)·4 = 4
  // λ‖u‖₁ = 0.5 · 6 = 3
  EXPECT_DOUBLE_EQ(tv_objective(img, u, pb), 1.5 + 4.0 + 3.0);
}

TEST(TvLoss, ShapeChecks) {
  const Arch a = make_arch(2, 3, 1);
  const ParamVec p = init_params(a, 1);
  ImageProblem pb = small_problem(3);
  EXPECT_THROW(tv_loss(a, p, Mat(3, 3), pb), std::invalid_argument);
  pb.observed = Mat(2, 2);
  EXPECT_THROW(tv_loss(a, p, Mat(6, 3), pb), std::invalid_argument);
}

TEST(TvGrad1h, MatchesFdAndEngine) {
  SplitMix64 rng(3);
  for (int k = 0; k < 10; ++k) {
    const auto t = fx::kink_free_tv(1, 3 + k % 3, 4, 1e-3, rng);
    const Vector g = tv_grad_1h(t.arch, t.params, t.u, t.problem);
    EXPECT_LE(relative_error(g, tv_grad(t.arch, t.params, t.u, t.problem)), 1e-13);
    EXPECT_LE(relative_error(g, grad_fd(tv_loss_of(t), t.params.data())), 1e-6);
  }
}

TEST(TvGrad1h, NoCouplingIsPixelRegression) {
  SplitMix64 rng(4);
  auto t = fx::kink_free_tv(1, 5, 4, 1e-3, rng);
  t.problem.beta = 0.0;
  Dataset pixels{t.problem.inputs, Mat(16, 1, t.problem.observed.data())};
  const Vector g = tv_grad_1h(t.arch, t.params, t.u, t.problem);
  Vector want = grad_mse(t.arch, t.params, pixels);
  for (double& v : want) v *= 16.0;  // the TV objective carries no 1/N
  EXPECT_LE(relative_error(g, want), 1e-13);
}

TEST(TvHess1h, OutputBiasIsPixelCount) {
  SplitMix64 rng(5);
  const auto t = fx::kink_free_tv(1, 4, 5, 1e-3, rng);
  const Mat h = tv_hess_1h(t.arch, t.params, t.u, t.problem);
  EXPECT_DOUBLE_EQ(h(h.rows() - 1, h.cols() - 1), 25.0);
}

TEST(TvHess1h, MatchesFdAndEngine) {
  SplitMix64 rng(6);
  for (int k = 0; k < 6; ++k) {
    const auto t = fx::kink_free_tv(1, 4, 4, 1e-3, rng);
    const Mat h = tv_hess_1h(t.arch, t.params, t.u, t.problem);
    EXPECT_LE(relative_error(h, tv_hess(t.arch, t.params, t.u, t.problem)), 1e-13);
    EXPECT_LE(relative_error(h, hess_fd_of_grad(tv_grad_of(t), t.params.data())), 1e-5);
  }
}

TEST(TvHess1h, RejectsBlurAndDepth) {
  SplitMix64 rng(7);
  auto t = fx::kink_free_tv(1, 3, 3, 0.0, rng);
  t.problem.blur_sigma = 1.0;
  EXPECT_THROW(tv_hess_1h(t.arch, t.params, t.u, t.problem), std::invalid_argument);
  EXPECT_THROW(tv_hess(t.arch, t.params, t.u, t.problem), std::invalid_argument);
  auto d = fx::kink_free_tv(2, 3, 3, 0.0, rng);
  EXPECT_THROW(tv_grad_1h(d.arch, d.params, d.u, d.problem), std::invalid_argument);
}

TEST(Tv4h, OutputBiasIsPixelCount) {
  SplitMix64 rng(8);
  const auto t = fx::kink_free_tv(4, 3, 4, 1e-3, rng);
  const Mat h = tv_hess_4h(t.arch, t.params, t.u, t.problem);
  EXPECT_DOUBLE_EQ(h(h.rows() - 1, h.cols() - 1), 16.0);
}

TEST(Tv4h, ConsistentStateHasNoFirstOrderTerm) {
  SplitMix64 rng(9);
  auto t = fx::kink_free_tv(4, 3, 4, 1e-3, rng);
  const Mat img = detail::tv_image(t.arch, t.params, t.problem);
  t.problem.observed = img;
  t.u = diff_operator_apply(img);
  for (double g : tv_grad_4h(t.arch, t.params, t.u, t.problem)) EXPECT_NEAR(g, 0.0, 1e-14);
}

TEST(Tv4h, MatchesFd) {
  SplitMix64 rng(10);
  for (int k = 0; k < 5; ++k) {
    const auto t = fx::kink_free_tv(4, 3, 3, 1e-3, rng);
    EXPECT_LE(relative_error(tv_grad_4h(t.arch, t.params, t.u, t.problem), grad_fd(tv_loss_of(t), t.params.data())),
              1e-6);
    EXPECT_LE(relative_error(tv_hess_4h(t.arch, t.params, t.u, t.problem),
                             hess_fd_of_grad(tv_grad_of(t), t.params.data())),
              1e-5);
  }
}

TEST(TvGrad, BlurredGradientMatchesFd) {
  SplitMix64 rng(11);
  auto t = fx::kink_free_tv(1, 4, 6, 1e-3, rng);
  t.problem.blur_sigma = 0.8;
  EXPECT_LE(relative_error(tv_grad(t.arch, t.params, t.u, t.problem), grad_fd(tv_loss_of(t), t.params.data())), 1e-6);
}

TEST(TvGrad, LaterGradeScaleAndBase) {
  SplitMix64 rng(12);
  auto t = fx::kink_free_tv(2, 3, 4, 1e-3, rng);
  t.problem.scale = 0.3;
  t.problem.base = Mat(4, 4);
  for (double& v : t.problem.base.data()) v = rng.normal();
  EXPECT_LE(relative_error(tv_grad(t.arch, t.params, t.u, t.problem), grad_fd(tv_loss_of(t), t.params.data())), 1e-6);
  EXPECT_LE(relative_error(tv_hess(t.arch, t.params, t.u, t.problem),
                           hess_fd_of_grad(tv_grad_of(t), t.params.data())),
            1e-5);
}
