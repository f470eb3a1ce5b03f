// Image experiments: coordinate-network regression on a pixel subset, and TV
// reconstruction (denoising / deblurring) by alternating a prox step on the
// split variable u with optimizer steps on the network parameters.
//
// Training happens on intensities / 255; PSNR is reported on the 0..255 scale.
#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mgdl/calculus_tv.hpp"
#include "mgdl/imaging_ops.hpp"
#include "mgdl/training.hpp"

namespace mgdl {

inline constexpr double kIntensityScale = 255.0;

inline Mat to_unit(const Mat& img) {
  Mat m = img;
  m *= 1.0 / kIntensityScale;
  return m;
}

inline Mat to_intensity(const Mat& img) {
  Mat m = img;
  m *= kIntensityScale;
  return m;
}

struct TvConfig {
  double lambda = 0.1;
  double beta = 1.0;
  double alpha_relax = 1.0;
  std::size_t inner_epochs = 1;
  Optimizer optimizer = Optimizer::Adam;
  double eta = 1e-3;
  AdamParams adam{};

  void validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0");
    if (!(alpha_relax > 0.0 && alpha_relax <= 1.0)) throw std::invalid_argument("alpha_relax must be in (0, 1]");
    if (inner_epochs < 1) throw std::invalid_argument("inner_epochs must be >= 1");
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  }
};

struct PsnrRow {
  std::size_t outer = 0;
  double psnr_train = 0.0;  // reconstruction vs the observed (degraded) image
  double psnr_test = 0.0;   // reconstruction vs ground truth
  double objective = 0.0;
};

struct TvRun {
  ParamVec params;
  Mat u;
  std::vector<PsnrRow> trace;
  bool diverged = false;
  double worst_u_increase = 0.0;  // max over outer iterations of L(Θ, u⁺) − L(Θ, u)
  bool u_monotone() const { return worst_u_increase <= 1e-12; }
};

/// u⁺ = prox_{αλ/β ‖·‖₁}(α B N + (1 − α) u)
inline Mat tv_u_update(const Mat& img, const Mat& u, double alpha, double lambda, double beta) {
  Mat arg = diff_operator_apply(img);
  arg *= alpha;
  Mat keep = u;
  keep *= 1.0 - alpha;
  arg += keep;
  return soft_threshold(arg, alpha * lambda / beta);
}

/// Network image on the problem grid: base + scale · N.
inline Mat tv_network_image(const Arch& arch, const ParamVec& p, const ImageProblem& pb) {
  return detail::tv_image(arch, p, pb);
}

/// Alternating prox / optimizer loop on a fixed ImageProblem. `truth` is in
/// training scale; it only feeds the PSNR trace.
inline TvRun prox_grad_tv_train(const Arch& arch, ParamVec init, const ImageProblem& pb_in, const TvConfig& cfg,
                                std::size_t outer, const Mat& truth) {
  cfg.validate();
  ImageProblem pb = pb_in;
  pb.lambda = cfg.lambda;
  pb.beta = cfg.beta;
  pb.validate();
  require_arch_params(arch, init);

  TvRun run;
  run.params = std::move(init);
  run.u = Mat(2 * pb.n, pb.n);
  AdamState adam(run.params.size(), cfg.adam);
  Vector g;

  for (std::size_t k = 0; k < outer; ++k) {
    const Mat img = tv_network_image(arch, run.params, pb);
    const double before = tv_objective(img, run.u, pb);
    Mat u_next = tv_u_update(img, run.u, cfg.alpha_relax, cfg.lambda, cfg.beta);
    const double after = tv_objective(img, u_next, pb);
    run.worst_u_increase = std::max(run.worst_u_increase, after - before);
    run.u = std::move(u_next);

    double obj = after;
    for (std::size_t it = 0; it < cfg.inner_epochs; ++it) {
      obj = tv_value_and_grad(arch, run.params, run.u, pb, g);
      if (!std::isfinite(obj) || obj > 1e12 || !all_finite(g)) {
        run.diverged = true;
        return run;
      }
      if (cfg.optimizer == Optimizer::GD) {
        for (std::size_t i = 0; i < g.size(); ++i) run.params.data()[i] -= cfg.eta * g[i];
      } else {
        adam_step(adam, run.params.data(), g, cfg.eta);
      }
    }
    const Mat rec = tv_network_image(arch, run.params, pb);
    const double obj_after = tv_objective(rec, run.u, pb);
    if (!std::isfinite(obj_after)) {
      run.diverged = true;
      return run;
    }
    const Mat shown = clamp_image(to_intensity(rec));
    run.trace.push_back({k + 1, psnr(to_intensity(pb.observed), shown), psnr(to_intensity(truth), shown), obj_after});
  }
  return run;
}

// ---------------------------------------------------------------------------
// Multi-grade TV: grade l ≥ 2 trains ε_l N_l on the frozen features of the
// earlier grades, added to the accumulated image of grades < l.

struct TvGrade {
  Arch arch;  // trainable grade net (input = previous features)
  ParamVec params;
  double epsilon = 1.0;
  std::vector<PsnrRow> trace;
};

struct TvStack {
  std::vector<TvGrade> grades;
  Mat image;  // accumulated reconstruction, training scale
  bool diverged = false;
  bool u_monotone = true;
};

struct TvMgdlConfig {
  std::size_t width = 48;
  std::size_t per_grade = 1;
  std::size_t grades = 2;
  std::vector<double> epsilons;  // default 1
  std::size_t outer_per_grade = 500;
  std::uint64_t seed = 1;
};

inline TvStack prox_grad_tv_mgdl(const ImageProblem& pb0, const TvConfig& cfg, const TvMgdlConfig& mc,
                                 const Mat& truth) {
  if (mc.grades < 1) throw std::invalid_argument("prox_grad_tv_mgdl: need at least one grade");
  TvStack st;
  ImageProblem pb = pb0;
  pb.base = Mat(pb.n, pb.n);
  Mat feats = pb0.inputs;
  std::size_t outer_offset = 0;
  for (std::size_t l = 0; l < mc.grades; ++l) {
    TvGrade g;
    g.epsilon = l < mc.epsilons.size() ? mc.epsilons[l] : 1.0;
    g.arch = make_arch(feats.cols(), mc.width, mc.per_grade);
    pb.inputs = feats;
    pb.scale = g.epsilon;
    TvRun r = prox_grad_tv_train(g.arch, init_params(g.arch, stream_seed(mc.seed, 0x7476ULL + l)), pb, cfg,
                                 mc.outer_per_grade, truth);
    for (auto& row : r.trace) row.outer += outer_offset;
    outer_offset += mc.outer_per_grade;
    st.u_monotone = st.u_monotone && r.u_monotone();
    if (r.diverged) {
      st.diverged = true;
      return st;
    }
    g.params = std::move(r.params);
    g.trace = std::move(r.trace);
    pb.base = tv_network_image(g.arch, g.params, pb);
    feats = hidden_features_batch(g.arch, g.params, feats, g.arch.depth() - 1);
    st.grades.push_back(std::move(g));
  }
  st.image = pb.base;
  return st;
}

// ---------------------------------------------------------------------------
// Plain regression on a pixel subset (no TV term).

struct RegressionRun {
  ParamVec params;
  TrainTrace trace;
  double psnr_train = 0.0;
  double psnr_test = 0.0;
};

/// Image from a scalar network evaluated on the full grid, clamped, 0..255 scale.
inline Mat render_prediction(const Arch& arch, const ParamVec& p, std::size_t n) {
  const ForwardBatch fb = forward_batch(arch, p, coord_grid(n).transpose());
  Mat img(n, n, fb.output().data());
  return clamp_image(to_intensity(img));
}

inline Mat render_prediction(const GradeStack& stack, std::size_t n) {
  const Vector v = mgdl_predict(stack, coord_grid(n));
  return clamp_image(to_intensity(Mat(n, n, v)));
}

inline Mat render_stack(const TvStack& st) { return clamp_image(to_intensity(st.image)); }

/// Dataset of (coordinate, intensity/255) pairs for the given pixel indices.
inline Dataset pixel_dataset(const Mat& img, const std::vector<std::size_t>& idx) {
  const std::size_t n = img.rows();
  const Mat grid = coord_grid(n);
  Dataset d{select_rows(grid, idx), Mat(idx.size(), 1)};
  for (std::size_t i = 0; i < idx.size(); ++i) d.targets(i, 0) = img.data()[idx[i]] / kIntensityScale;
  return d;
}

/// PSNR over a subset of pixels: 10 log10(|S| 255² / Σ_S (v − v̂)²).
inline double psnr_subset(const Mat& truth, const Mat& recon, const std::vector<std::size_t>& idx) {
  double err = 0.0;
  for (std::size_t i : idx) {
    const double d = truth.data()[i] - recon.data()[i];
    err += d * d;
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(idx.size()) * kIntensityScale * kIntensityScale / err);
}

}  // namespace mgdl
