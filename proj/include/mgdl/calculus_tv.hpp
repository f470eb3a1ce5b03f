// The split total-variation objective over network parameters,
//
//   L(Θ, u) = ½‖f̂ − A N‖² + (β/2)‖u − B N‖² + λ‖u‖₁,₁,
//
// where N is the n x n image produced by the net on the pixel inputs. A is
// the identity (denoising) or a Gaussian blur. With N = base + scale · net,
// which covers later MGDL grades, the chain rule gives
//
//   ∂L/∂Θ = scale Σ_p r_p J_p,   r = Aᵀ(A N − f̂) + β Bᵀ(B N − u),
//   H = scale² Jᵀ(AᵀA + β BᵀB)J + scale Σ_p r_p ∇²N_p.
//
// No 1/N factor here, unlike the regression loss.
#pragma once

#include "mgdl/calculus.hpp"
#include "mgdl/imaging_ops.hpp"

namespace mgdl {

struct ImageProblem {
  std::size_t n = 0;
  Mat observed;             // f̂, n x n, training scale
  Mat inputs;               // n² x d_0: coordinates, or frozen features for later grades
  double blur_sigma = 0.0;  // 0 -> A is the identity
  double lambda = 0.1;
  double beta = 1.0;
  Mat base;                 // previous grades' prediction (n x n); empty means zero
  double scale = 1.0;       // ε_l multiplying the current net

  void validate() const {
    if (observed.rows() != n || observed.cols() != n) throw std::invalid_argument("ImageProblem: observed must be n x n");
    if (inputs.rows() != n * n) throw std::invalid_argument("ImageProblem: need one input row per pixel");
    if (base.size() != 0 && (base.rows() != n || base.cols() != n))
      throw std::invalid_argument("ImageProblem: base must be n x n");
    if (lambda < 0.0 || beta < 0.0 || blur_sigma < 0.0 || !(scale > 0.0))
      throw std::invalid_argument("ImageProblem: negative weight");
  }

  Mat apply_a(const Mat& v) const { return gaussian_blur_apply(v, blur_sigma); }
  Mat apply_at(const Mat& v) const { return gaussian_blur_adjoint(v, blur_sigma); }
};

namespace detail {

/// Image N = base + scale · net, with the forward batch kept for backprop.
inline Mat tv_image(const Arch& arch, const ParamVec& p, const ImageProblem& pb, ForwardBatch* keep = nullptr) {
  if (arch.output_dim() != 1) throw std::invalid_argument("tv: scalar-output nets only");
  ForwardBatch fb = forward_batch(arch, p, pb.inputs.transpose());
  Mat img(pb.n, pb.n, fb.output().data());
  img *= pb.scale;
  if (pb.base.size() != 0) img += pb.base;
  if (keep) *keep = std::move(fb);
  return img;
}

inline void require_u(const Mat& u, const ImageProblem& pb) {
  if (u.rows() != 2 * pb.n || u.cols() != pb.n) throw std::invalid_argument("tv: u must be 2n x n");
}

/// r = Aᵀ(A N − f̂) + β Bᵀ(B N − u)
inline Mat tv_residual(const Mat& img, const Mat& u, const ImageProblem& pb) {
  Mat fit = pb.apply_a(img);
  fit -= pb.observed;
  Mat r = pb.apply_at(fit);
  Mat d = diff_operator_apply(img);
  d -= u;
  Mat rb = diff_operator_adjoint(d);
  rb *= pb.beta;
  r += rb;
  return r;
}

}  // namespace detail

inline double tv_objective(const Mat& img, const Mat& u, const ImageProblem& pb) {
  Mat fit = pb.apply_a(img);
  fit -= pb.observed;
  Mat d = diff_operator_apply(img);
  d -= u;
  double a = 0.0, b = 0.0;
  for (double v : fit.data()) a += v * v;
  for (double v : d.data()) b += v * v;
  return 0.5 * a + 0.5 * pb.beta * b + pb.lambda * l11_norm(u);
}

inline double tv_loss(const Arch& arch, const ParamVec& p, const Mat& u, const ImageProblem& pb) {
  pb.validate();
  detail::require_u(u, pb);
  return tv_objective(detail::tv_image(arch, p, pb), u, pb);
}

inline double tv_value_and_grad(const Arch& arch, const ParamVec& p, const Mat& u, const ImageProblem& pb,
                                Vector& grad) {
  pb.validate();
  detail::require_u(u, pb);
  if (arch.frozen_depth != 0) throw std::invalid_argument("tv: pass frozen features as problem inputs instead");
  ForwardBatch fb;
  const Mat img = detail::tv_image(arch, p, pb, &fb);
  Mat r = detail::tv_residual(img, u, pb);
  r *= pb.scale;
  const auto deltas = engine::backprop(arch, p, fb, Mat(1, pb.n * pb.n, r.data()));
  grad = engine::gradient_from_deltas(p, fb, deltas);
  return tv_objective(img, u, pb);
}

inline Vector tv_grad(const Arch& arch, const ParamVec& p, const Mat& u, const ImageProblem& pb) {
  Vector g;
  tv_value_and_grad(arch, p, u, pb, g);
  return g;
}

/// Exact Hessian in Θ; denoising only (A = identity).
inline Mat tv_hess(const Arch& arch, const ParamVec& p, const Mat& u, const ImageProblem& pb) {
  pb.validate();
  detail::require_u(u, pb);
  if (pb.blur_sigma != 0.0) throw std::invalid_argument("tv_hess: explicit Hessian requires the identity operator");
  if (arch.frozen_depth != 0) throw std::invalid_argument("tv: pass frozen features as problem inputs instead");
  if (!arch.activation.is_relu() && arch.depth() != 2)
    throw std::invalid_argument("tv_hess: smooth activations are supported for one hidden layer only");
  const std::size_t n = pb.n;
  ForwardBatch fb;
  const Mat img = detail::tv_image(arch, p, pb, &fb);
  Mat r = detail::tv_residual(img, u, pb);
  r *= pb.scale;
  const auto deltas = engine::backprop(arch, p, fb, engine::ones_seed(n * n));
  const Mat j = engine::jacobian(p, fb, deltas);
  // B J, column by column
  Mat bj(2 * n * n, p.size());
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      const double* cur = j.row(s * n + t);
      if (t > 0) {
        const double* left = j.row(s * n + t - 1);
        double* o = bj.row(s * n + t);
        for (std::size_t q = 0; q < p.size(); ++q) o[q] = cur[q] - left[q];
      }
      if (s > 0) {
        const double* up = j.row((s - 1) * n + t);
        double* o = bj.row(n * n + s * n + t);
        for (std::size_t q = 0; q < p.size(); ++q) o[q] = cur[q] - up[q];
      }
    }
  Mat h(p.size(), p.size());
  const double s2 = pb.scale * pb.scale;
  add_gram_upper(j, s2, h);
  add_gram_upper(bj, s2 * pb.beta, h);
  engine::add_curvature_upper(arch, p, fb, deltas, r.data(), h);
  h.mirror_upper();
  return h;
}

// ---------------------------------------------------------------------------
// Pixelwise transcription for one hidden layer (denoising): with
//   e1 = N_st − f̂_st, e2 = N_st − N_s(t−1) − u¹_st, e3 = N_st − N_(s−1)t − u²_st
// and zero differences on the first column/row,
//   ∂L/∂θ = Σ J_st e1 + β((J_st − J_s(t−1)) e2 + (J_st − J_(s−1)t) e3).

namespace detail {
inline void require_tv_1h(const Arch& arch, const ImageProblem& pb) {
  require_depth(arch, 1, "tv 1h");
  pb.validate();
  if (pb.blur_sigma != 0.0) throw std::invalid_argument("tv 1h: identity operator required");
  if (pb.base.size() != 0 || pb.scale != 1.0) throw std::invalid_argument("tv 1h: plain single-grade problem required");
}

struct PixelTerms {
  std::vector<Vector> jac;  // J_st per pixel
  std::vector<Vector> ind;  // σ'(z) per pixel
  std::vector<Vector> x;
  std::vector<double> e1, e2, e3;
};

inline PixelTerms pixel_terms(const Arch& arch, const ParamVec& p, const Mat& u, const ImageProblem& pb) {
  const std::size_t n = pb.n;
  PixelTerms t;
  std::vector<double> out(n * n);
  for (std::size_t i = 0; i < n * n; ++i) {
    const std::span<const double> x(pb.inputs.row(i), pb.inputs.cols());
    const auto st = sample_state(arch, p, x);
    out[i] = st.out;
    t.jac.push_back(sample_jacobian(p, st));
    t.ind.push_back(st.ind[0]);
    t.x.emplace_back(x.begin(), x.end());
  }
  t.e1.resize(n * n);
  t.e2.resize(n * n);
  t.e3.resize(n * n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = s * n + c;
      t.e1[i] = out[i] - pb.observed(s, c);
      t.e2[i] = (c > 0 ? out[i] - out[i - 1] : 0.0) - u(s, c);
      t.e3[i] = (s > 0 ? out[i] - out[i - n] : 0.0) - u(n + s, c);
    }
  return t;
}
}  // namespace detail

inline Vector tv_grad_1h(const Arch& arch, const ParamVec& p, const Mat& u, const ImageProblem& pb) {
  detail::require_tv_1h(arch, pb);
  detail::require_u(u, pb);
  const std::size_t n = pb.n;
  const auto t = detail::pixel_terms(arch, p, u, pb);
  Vector g(p.size(), 0.0);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = s * n + c;
      for (std::size_t q = 0; q < g.size(); ++q) {
        double v = t.jac[i][q] * t.e1[i];
        const double dh = c > 0 ? t.jac[i][q] - t.jac[i - 1][q] : 0.0;
        const double dv = s > 0 ? t.jac[i][q] - t.jac[i - n][q] : 0.0;
        v += pb.beta * (dh * t.e2[i] + dv * t.e3[i]);
        g[q] += v;
      }
    }
  return g;
}

/// Hessian from the pixelwise block list: Gauss–Newton terms built from J
/// differences, and the e-weighted (𝕀 ⊗ x, 𝕀) coupling with W_2, differenced
/// the same way. ∂²L/∂b_2² comes out as n².
inline Mat tv_hess_1h(const Arch& arch, const ParamVec& p, const Mat& u, const ImageProblem& pb) {
  detail::require_tv_1h(arch, pb);
  detail::require_u(u, pb);
  if (!arch.activation.is_relu()) throw std::invalid_argument("tv_hess_1h: ReLU only");
  const std::size_t n = pb.n;
  const auto t = detail::pixel_terms(arch, p, u, pb);
  const auto [d0, d1] = p.layout()[0];
  const std::size_t m = p.size();
  const std::size_t ob1 = d0 * d1, ow2 = ob1 + d1;
  Mat h(m, m);
  auto outer = [&](const Vector& a, double w) {
    for (std::size_t r = 0; r < m; ++r) {
      if (a[r] == 0.0) continue;
      for (std::size_t c = r; c < m; ++c) h(r, c) += w * a[r] * a[c];
    }
  };
  // (𝕀 ⊗ x) e and 𝕀 e into the (W_1, W_2) and (b_1, W_2) blocks
  auto coupling = [&](std::size_t i, double e) {
    for (std::size_t c = 0; c < d1; ++c) {
      const double ie = t.ind[i][c] * e;
      if (ie == 0.0) continue;
      for (std::size_t r = 0; r < d0; ++r) h(r + c * d0, ow2 + c) += ie * t.x[i][r];
      h(ob1 + c, ow2 + c) += ie;
    }
  };
  Vector diff(m);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t c = 0; c < n; ++c) {
      const std::size_t i = s * n + c;
      outer(t.jac[i], 1.0);
      coupling(i, t.e1[i]);
      if (c > 0) {
        for (std::size_t q = 0; q < m; ++q) diff[q] = t.jac[i][q] - t.jac[i - 1][q];
        outer(diff, pb.beta);
        coupling(i, pb.beta * t.e2[i]);
        coupling(i - 1, -pb.beta * t.e2[i]);
      } else {
        coupling(i, 0.0);
      }
      if (s > 0) {
        for (std::size_t q = 0; q < m; ++q) diff[q] = t.jac[i][q] - t.jac[i - n][q];
        outer(diff, pb.beta);
        coupling(i, pb.beta * t.e3[i]);
        coupling(i - n, -pb.beta * t.e3[i]);
      }
    }
  h.mirror_upper();
  return h;
}

/// Four hidden layers: the batched engine, restricted to the denoising case.
inline Vector tv_grad_4h(const Arch& arch, const ParamVec& p, const Mat& u, const ImageProblem& pb) {
  detail::require_depth(arch, 4, "tv_grad_4h");
  if (pb.blur_sigma != 0.0) throw std::invalid_argument("tv_grad_4h: identity operator required");
  return tv_grad(arch, p, u, pb);
}

inline Mat tv_hess_4h(const Arch& arch, const ParamVec& p, const Mat& u, const ImageProblem& pb) {
  detail::require_depth(arch, 4, "tv_hess_4h");
  return tv_hess(arch, p, u, pb);
}

}  // namespace mgdl
