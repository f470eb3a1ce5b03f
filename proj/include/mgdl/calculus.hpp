// Least-squares losses, exact gradients and Hessians, and finite-difference
// oracles.
//
// Two independent code paths compute the same derivatives:
//   * a batched engine (backprop for gradients, a layer-pair contraction for
//     ReLU Hessians) used by the trainers and spectrum tracking, and
//   * per-sample transcriptions of the closed-form one- and four-hidden-layer
//     block formulas (the *_1h / *_4h functions), kept deliberately naive so
//     they can serve as reference implementations in the tests.
//
// With residual e = N(x) - y the loss is L = (1/2N) Σ e², the gradient is
// (1/N) Σ e J and the Hessian is (1/N) Σ (J Jᵀ + e ∇²N). For ReLU nets ∇²N
// only couples parameters of layer i with weights of a later layer j.
//
// Samples are always accumulated in ascending index order, plain summation.
// The BLAS calls in Hessian assembly are deterministic for a given build.
#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mgdl/network.hpp"

namespace mgdl {

// ---------------------------------------------------------------------------
// Data

struct Dataset {
  Mat inputs;   // N x d_0, one sample per row
  Mat targets;  // N x d_out

  std::size_t size() const { return inputs.rows(); }

  void validate() const {
    if (inputs.rows() != targets.rows()) throw std::invalid_argument("Dataset: inputs/targets count mismatch");
    if (inputs.rows() == 0) throw std::invalid_argument("Dataset: empty");
    if (!inputs.all_finite() || !targets.all_finite()) throw std::invalid_argument("Dataset: non-finite entries");
  }

  static Dataset from_vectors(const std::vector<Vector>& xs, const std::vector<Vector>& ys) {
    if (xs.size() != ys.size() || xs.empty()) throw std::invalid_argument("Dataset: bad sample lists");
    Dataset d{Mat(xs.size(), xs[0].size()), Mat(ys.size(), ys[0].size())};
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (xs[i].size() != d.inputs.cols() || ys[i].size() != d.targets.cols())
        throw std::invalid_argument("Dataset: ragged samples");
      std::copy(xs[i].begin(), xs[i].end(), d.inputs.row(i));
      std::copy(ys[i].begin(), ys[i].end(), d.targets.row(i));
    }
    return d;
  }
};

// ---------------------------------------------------------------------------
// Batched engine

namespace engine {

/// Trainable view of (arch, params): the suffix net plus its feature-major inputs.
struct View {
  Arch arch;
  ParamVec params;
  Mat inputs_fm;
  std::size_t offset = 0;  // where the suffix starts in the full vector
};

inline View make_view(const Arch& arch, const ParamVec& p, const Mat& inputs) {
  require_arch_params(arch, p);
  if (inputs.cols() != arch.input_dim()) throw std::invalid_argument("input width does not match architecture");
  if (arch.frozen_depth == 0) return {arch, p, inputs.transpose(), 0};
  Mat feats = hidden_features_batch(arch, p, inputs, arch.frozen_depth);
  return {trainable_suffix(arch), suffix_params(arch, p), feats.transpose(), suffix_offset(p, arch.frozen_depth)};
}

/// out(c, :) = Σ_r W_k(r, c) in(r, :), no bias.
inline void linear_layer(const ParamVec& p, std::size_t k, const Mat& in, Mat& out) {
  const auto [rows, cols] = p.layout()[k];
  const std::size_t n = in.cols();
  out = Mat(cols, n);
  gemm(false, false, cols, n, rows, 1.0, p.data().data() + p.weight_offset(k), rows, in.data().data(), n, 0.0,
       out.data().data(), n);
}

/// out(r, :) = Σ_c W_k(r, c) in(c, :), the transpose map used going backwards.
inline void linear_layer_t(const ParamVec& p, std::size_t k, const Mat& in, Mat& out) {
  const auto [rows, cols] = p.layout()[k];
  const std::size_t n = in.cols();
  out.resize(rows, n);
  gemm(true, false, rows, n, cols, 1.0, p.data().data() + p.weight_offset(k), rows, in.data().data(), n, 0.0,
       out.data().data(), n);
}

/// deltas[k] = ∂(Σ_n seed_n · N_n)/∂z_{k+1}, feature-major, for every layer k.
/// deltas.back() holds the seed on entry; the other entries are overwritten.
inline void backprop_inplace(const Arch& arch, const ParamVec& p, const ForwardBatch& fb, std::vector<Mat>& deltas) {
  const std::size_t depth = arch.depth();
  if (deltas.size() != depth) throw std::invalid_argument("backprop: one delta per layer expected");
  for (std::size_t k = depth - 1; k-- > 0;) {
    linear_layer_t(p, k + 1, deltas[k + 1], deltas[k]);
    Mat& d = deltas[k];
    const Mat& z = fb.pre[k];
    if (arch.activation.is_relu()) {
      for (std::size_t i = 0; i < d.size(); ++i)
        if (z.data()[i] < 0.0) d.data()[i] = 0.0;
    } else {
      for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= arch.activation.deriv(z.data()[i]);
    }
  }
}

inline std::vector<Mat> backprop(const Arch& arch, const ParamVec& p, const ForwardBatch& fb, Mat seed) {
  std::vector<Mat> deltas(arch.depth());
  deltas.back() = std::move(seed);
  backprop_inplace(arch, p, fb, deltas);
  return deltas;
}

/// Σ_n over samples of the parameter gradient given backpropagated deltas.
inline void gradient_from_deltas(const ParamVec& p, const ForwardBatch& fb, const std::vector<Mat>& deltas, Vector& g) {
  g.resize(p.size());
  const std::size_t n = fb.samples;
  for (std::size_t k = 0; k < p.layers(); ++k) {
    const auto [rows, cols] = p.layout()[k];
    // G_kᵀ (cols x rows, row-major) = Δ_k A_kᵀ
    gemm(false, true, cols, rows, n, 1.0, deltas[k].data().data(), n, fb.act[k].data().data(), n, 0.0,
         g.data() + p.weight_offset(k), rows);
    const std::size_t bo = p.bias_offset(k);
    for (std::size_t c = 0; c < cols; ++c) {
      const double* d = deltas[k].row(c);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += d[i];
      g[bo + c] = s;
    }
  }
}

inline Vector gradient_from_deltas(const ParamVec& p, const ForwardBatch& fb, const std::vector<Mat>& deltas) {
  Vector g;
  gradient_from_deltas(p, fb, deltas, g);
  return g;
}

/// Output Jacobian, one row per sample (scalar-output nets).
inline Mat jacobian(const ParamVec& p, const ForwardBatch& fb, const std::vector<Mat>& deltas) {
  const std::size_t n = fb.samples;
  const std::size_t m = p.size();
  Mat j(n, m);
  for (std::size_t k = 0; k < p.layers(); ++k) {
    const auto [rows, cols] = p.layout()[k];
    const std::size_t wo = p.weight_offset(k);
    const std::size_t bo = p.bias_offset(k);
    for (std::size_t c = 0; c < cols; ++c) {
      const double* d = deltas[k].row(c);
      for (std::size_t r = 0; r < rows; ++r) {
        const double* a = fb.act[k].row(r);
        const std::size_t col = wo + r + c * rows;
        for (std::size_t i = 0; i < n; ++i) j(i, col) = a[i] * d[i];
      }
      for (std::size_t i = 0; i < n; ++i) j(i, bo + c) = d[i];
    }
  }
  return j;
}

/// H(upper) += Σ_n coeff_n ∇²N_n for a ReLU net (no frozen layers).
///
/// Entry (θ_i, W_j(r_j, c_j)) for i < j is ∂a_j[r_j]/∂θ_i · δ_j[c_j], with
/// ∂a_j/∂z_{i+1} propagated forward as P ← P W diag(1[z >= 0]). The
/// contraction over samples for each hidden unit c_i of layer i is one GEMM.
inline void add_relu_curvature_upper(const Arch& arch, const ParamVec& p, const ForwardBatch& fb,
                                     const std::vector<Mat>& deltas, std::span<const double> coeff, Mat& h) {
  if (!arch.activation.is_relu()) throw std::invalid_argument("layer-pair curvature requires ReLU");
  const std::size_t depth = arch.depth();
  const std::size_t n = fb.samples;
  for (std::size_t i = 0; i + 1 < depth; ++i) {
    const auto [di, di1] = p.layout()[i];
    // [a_i; 1] so the bias row comes out of the same GEMM
    Mat a_ext(di + 1, n);
    std::copy(fb.act[i].data().begin(), fb.act[i].data().end(), a_ext.data().begin());
    std::fill(a_ext.row(di), a_ext.row(di) + n, 1.0);

    // P[c] : ∂a_{i+1}/∂z_{i+1}[c] per sample, shaped d_{i+1} x n
    std::vector<Mat> pmat(di1);
    for (std::size_t c = 0; c < di1; ++c) {
      pmat[c] = Mat(di1, n);
      const double* z = fb.pre[i].row(c);
      double* row = pmat[c].row(c);
      for (std::size_t s = 0; s < n; ++s) row[s] = z[s] >= 0.0 ? 1.0 : 0.0;
    }

    for (std::size_t j = i + 1; j < depth; ++j) {
      const auto [dj, dj1] = p.layout()[j];
      // coeff ⊙ δ_j, reused for every c_i
      Mat cd(dj1, n);
      for (std::size_t c = 0; c < dj1; ++c) {
        const double* d = deltas[j].row(c);
        double* o = cd.row(c);
        for (std::size_t s = 0; s < n; ++s) o[s] = coeff[s] * d[s];
      }
      const std::size_t wj = p.weight_offset(j);
      Mat bt(dj * dj1, n);
      for (std::size_t ci = 0; ci < di1; ++ci) {
        for (std::size_t cj = 0; cj < dj1; ++cj)
          for (std::size_t rj = 0; rj < dj; ++rj) {
            const double* pr = pmat[ci].row(rj);
            const double* w = cd.row(cj);
            double* o = bt.row(rj + cj * dj);
            for (std::size_t s = 0; s < n; ++s) o[s] = pr[s] * w[s];
          }
        const Mat blk = matmul_bt(a_ext, bt);  // (d_i + 1) x (d_j d_{j+1})
        for (std::size_t ri = 0; ri < di; ++ri) {
          double* hr = h.row(p.weight_offset(i) + ri + ci * di) + wj;
          const double* br = blk.row(ri);
          for (std::size_t q = 0; q < blk.cols(); ++q) hr[q] += br[q];
        }
        double* hb = h.row(p.bias_offset(i) + ci) + wj;
        const double* br = blk.row(di);
        for (std::size_t q = 0; q < blk.cols(); ++q) hb[q] += br[q];
      }
      if (j + 1 < depth) {
        // P ← P W_j diag(1[z_{j+1} >= 0])
        const Mat& z = fb.pre[j];
        for (std::size_t ci = 0; ci < di1; ++ci) {
          Mat next;
          linear_layer(p, j, pmat[ci], next);
          for (std::size_t q = 0; q < next.size(); ++q)
            if (z.data()[q] < 0.0) next.data()[q] = 0.0;
          pmat[ci] = std::move(next);
        }
      }
    }
  }
}

/// Σ_n coeff_n ∇²N_n for a one-hidden-layer net with a smooth activation:
/// the σ'' terms inside each hidden unit plus the σ'(z)[x; 1] coupling to W_2.
inline void add_smooth_1h_curvature_upper(const Arch& arch, const ParamVec& p, const ForwardBatch& fb,
                                          std::span<const double> coeff, Mat& h) {
  if (arch.depth() != 2) throw std::invalid_argument("smooth curvature is implemented for one hidden layer only");
  const auto [d0, d1] = p.layout()[0];
  const Activation& act = arch.activation;
  const std::size_t n = fb.samples;
  const std::size_t w2 = p.weight_offset(1);
  for (std::size_t c = 0; c < d1; ++c) {
    const double vc = p.w(1, c, 0);
    const double* z = fb.pre[0].row(c);
    // indices of unit c's incoming parameters: W_1(:, c) then b_1[c]
    std::vector<std::size_t> idx;
    for (std::size_t r = 0; r < d0; ++r) idx.push_back(p.weight_offset(0) + r + c * d0);
    idx.push_back(p.bias_offset(0) + c);
    for (std::size_t s = 0; s < n; ++s) {
      const double k2 = coeff[s] * vc * act.second(z[s]);
      const double k1 = coeff[s] * act.deriv(z[s]);
      for (std::size_t a = 0; a <= d0; ++a) {
        const double xa = a < d0 ? fb.act[0](a, s) : 1.0;
        for (std::size_t b = a; b <= d0; ++b) {
          const double xb = b < d0 ? fb.act[0](b, s) : 1.0;
          h(idx[a], idx[b]) += k2 * xa * xb;
        }
        h(idx[a], w2 + c) += k1 * xa;
      }
    }
  }
}

/// Σ_n coeff_n ∇²N_n for whichever activation the arch uses.
inline void add_curvature_upper(const Arch& arch, const ParamVec& p, const ForwardBatch& fb,
                                const std::vector<Mat>& deltas, std::span<const double> coeff, Mat& h) {
  if (arch.activation.is_relu())
    add_relu_curvature_upper(arch, p, fb, deltas, coeff, h);
  else
    add_smooth_1h_curvature_upper(arch, p, fb, coeff, h);
}

inline Mat ones_seed(std::size_t n) { return Mat(1, n, 1.0); }

/// Copies a suffix-sized matrix into the trainable block of a full-size one.
inline Mat embed(const Mat& sub, std::size_t offset, std::size_t full) {
  if (offset == 0 && sub.rows() == full) return sub;
  Mat h(full, full);
  for (std::size_t i = 0; i < sub.rows(); ++i)
    std::copy(sub.row(i), sub.row(i) + sub.cols(), h.row(offset + i) + offset);
  return h;
}

inline Vector embed(const Vector& sub, std::size_t offset, std::size_t full) {
  Vector g(full, 0.0);
  std::copy(sub.begin(), sub.end(), g.begin() + static_cast<std::ptrdiff_t>(offset));
  return g;
}

}  // namespace engine

// ---------------------------------------------------------------------------
// Mean-squared-error loss

/// Residuals N(x_n) - y_n, feature-major (d_out x N).
inline Mat residuals(const ForwardBatch& fb, const Dataset& data) {
  Mat r = fb.output();
  for (std::size_t c = 0; c < r.rows(); ++c)
    for (std::size_t s = 0; s < r.cols(); ++s) r(c, s) -= data.targets(s, c);
  return r;
}

inline double half_mean_square(const Mat& r) {
  double s = 0.0;
  const std::size_t n = r.cols();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < r.rows(); ++c) s += r(c, i) * r(c, i);
  return s / (2.0 * static_cast<double>(n));
}

inline double mse_loss(const Arch& arch, const ParamVec& p, const Dataset& data) {
  data.validate();
  const ForwardBatch fb = forward_batch(arch, p, data.inputs.transpose());
  return half_mean_square(residuals(fb, data));
}

/// Loss and gradient in one pass. Frozen-prefix entries of the gradient are zero.
inline double mse_value_and_grad(const Arch& arch, const ParamVec& p, const Dataset& data, Vector& grad) {
  data.validate();
  const engine::View v = engine::make_view(arch, p, data.inputs);
  const ForwardBatch fb = forward_batch(v.arch, v.params, v.inputs_fm);
  Mat r = residuals(fb, data);
  const double loss = half_mean_square(r);
  r *= 1.0 / static_cast<double>(data.size());
  const auto deltas = engine::backprop(v.arch, v.params, fb, std::move(r));
  grad = engine::embed(engine::gradient_from_deltas(v.params, fb, deltas), v.offset, p.size());
  return loss;
}

/// Reusable buffers for mse_value_and_grad_fm.
struct MseWorkspace {
  ForwardBatch fb;
  std::vector<Mat> deltas;
};

/// Same as mse_value_and_grad for a net with nothing frozen, given inputs
/// already in feature-major order. Skips validation; the training hot path.
inline double mse_value_and_grad_fm(const Arch& arch, const ParamVec& p, const Mat& inputs_fm, const Mat& targets,
                                    Vector& grad, MseWorkspace& ws) {
  ForwardBatch& fb = ws.fb;
  fb.act.resize(1);
  fb.act[0].resize(inputs_fm.rows(), inputs_fm.cols());
  std::copy(inputs_fm.data().begin(), inputs_fm.data().end(), fb.act[0].data().begin());
  forward_batch_inplace(arch, p, fb);
  ws.deltas.resize(arch.depth());
  Mat& r = ws.deltas.back();
  r = fb.output();
  for (std::size_t s = 0; s < r.cols(); ++s) r(0, s) -= targets(s, 0);
  const double loss = half_mean_square(r);
  r *= 1.0 / static_cast<double>(r.cols());
  engine::backprop_inplace(arch, p, fb, ws.deltas);
  engine::gradient_from_deltas(p, fb, ws.deltas, grad);
  return loss;
}

inline Vector grad_mse(const Arch& arch, const ParamVec& p, const Dataset& data) {
  Vector g;
  mse_value_and_grad(arch, p, data, g);
  return g;
}

/// Per-sample output Jacobian (N x M). Frozen columns are zero.
inline Mat output_jacobian(const Arch& arch, const ParamVec& p, const Mat& inputs) {
  if (arch.output_dim() != 1) throw std::invalid_argument("output_jacobian: scalar-output nets only");
  const engine::View v = engine::make_view(arch, p, inputs);
  const ForwardBatch fb = forward_batch(v.arch, v.params, v.inputs_fm);
  const auto deltas = engine::backprop(v.arch, v.params, fb, engine::ones_seed(fb.samples));
  const Mat js = engine::jacobian(v.params, fb, deltas);
  if (v.offset == 0) return js;
  Mat j(js.rows(), p.size());
  for (std::size_t i = 0; i < js.rows(); ++i) std::copy(js.row(i), js.row(i) + js.cols(), j.row(i) + v.offset);
  return j;
}

/// Hessian over the trainable parameters only (suffix ordering, no frozen rows).
inline Mat hess_mse_trainable(const Arch& arch, const ParamVec& p, const Dataset& data) {
  data.validate();
  if (arch.output_dim() != 1) throw std::invalid_argument("hess_mse: scalar-output nets only");
  const engine::View v = engine::make_view(arch, p, data.inputs);
  if (!v.arch.activation.is_relu() && v.arch.depth() != 2)
    throw std::invalid_argument("hess_mse: smooth activations are supported for one hidden layer only");
  const ForwardBatch fb = forward_batch(v.arch, v.params, v.inputs_fm);
  const auto deltas = engine::backprop(v.arch, v.params, fb, engine::ones_seed(fb.samples));
  const double inv_n = 1.0 / static_cast<double>(data.size());
  const Mat r = residuals(fb, data);
  Vector coeff(r.data());
  for (double& c : coeff) c *= inv_n;

  Mat h(v.params.size(), v.params.size());
  add_gram_upper(engine::jacobian(v.params, fb, deltas), inv_n, h);
  engine::add_curvature_upper(v.arch, v.params, fb, deltas, coeff, h);
  h.mirror_upper();
  return h;
}

/// Full M x M Hessian; rows and columns of frozen parameters are zero.
inline Mat hess_mse(const Arch& arch, const ParamVec& p, const Dataset& data) {
  return engine::embed(hess_mse_trainable(arch, p, data), suffix_offset(p, arch.frozen_depth), p.size());
}

// ---------------------------------------------------------------------------
// Closed-form transcriptions (per sample, reference implementations)

namespace detail {

inline void require_depth(const Arch& arch, std::size_t hidden, const char* what) {
  arch.validate();
  if (arch.depth() != hidden + 1) throw std::invalid_argument(std::string(what) + ": wrong number of hidden layers");
  if (arch.output_dim() != 1) throw std::invalid_argument(std::string(what) + ": scalar output required");
  if (arch.frozen_depth != 0) throw std::invalid_argument(std::string(what) + ": frozen layers not supported");
}

inline Mat column(std::span<const double> v) { return Mat(v.size(), 1, Vector(v.begin(), v.end())); }

/// Per-sample forward state: activations a_0..a_{D-1}, indicator diagonals
/// and the backward vectors z (∂N/∂z_j).
struct SampleState {
  std::vector<Vector> a;     // a[0] = x
  std::vector<Vector> ind;   // σ'(z_{k+1}) for hidden layers
  std::vector<Vector> zvec;  // zvec[k] = ∂N/∂z_{k+1}; last is [1]
  double out = 0.0;
};

inline SampleState sample_state(const Arch& arch, const ParamVec& p, std::span<const double> x) {
  const std::size_t depth = arch.depth();
  SampleState st;
  st.a.emplace_back(x.begin(), x.end());
  for (std::size_t k = 0; k + 1 < depth; ++k) {
    const auto [rows, cols] = p.layout()[k];
    Vector z(cols), a(cols), d(cols);
    for (std::size_t c = 0; c < cols; ++c) {
      double s = p.b(k, c);
      for (std::size_t r = 0; r < rows; ++r) s += p.w(k, r, c) * st.a[k][r];
      z[c] = s;
      a[c] = arch.activation.value(s);
      d[c] = arch.activation.deriv(s);
    }
    st.a.push_back(a);
    st.ind.push_back(d);
  }
  const std::size_t last = depth - 1;
  st.out = p.b(last, 0);
  for (std::size_t r = 0; r < p.layout()[last].rows; ++r) st.out += p.w(last, r, 0) * st.a[last][r];
  // z_{D-1} = I_{D-1} W_D, z_{j} = I_j W_{j+1} z_{j+1}
  st.zvec.assign(depth, {});
  st.zvec[last] = {1.0};
  for (std::size_t k = last; k-- > 0;) {
    const auto [rows, cols] = p.layout()[k + 1];
    Vector z(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < cols; ++c) s += p.w(k + 1, r, c) * st.zvec[k + 1][c];
      z[r] = st.ind[k][r] * s;
    }
    st.zvec[k] = z;
  }
  return st;
}

/// ∂N/∂W for one sample: blocks (z_k ⊗ a_k, z_k) per layer.
inline Vector sample_jacobian(const ParamVec& p, const SampleState& st) {
  Vector j(p.size(), 0.0);
  for (std::size_t k = 0; k < p.layers(); ++k) {
    const Vector zk = kron(st.zvec[k], st.a[k]);
    std::copy(zk.begin(), zk.end(), j.begin() + static_cast<std::ptrdiff_t>(p.weight_offset(k)));
    std::copy(st.zvec[k].begin(), st.zvec[k].end(), j.begin() + static_cast<std::ptrdiff_t>(p.bias_offset(k)));
  }
  return j;
}

}  // namespace detail

/// One hidden layer, ReLU: ∂L/∂W_1 = (1/N) Σ (z ⊗ x) e, ∂L/∂b_1 = (1/N) Σ z e,
/// ∂L/∂W_2 = (1/N) Σ a_1 e, ∂L/∂b_2 = (1/N) Σ e, with z = 𝕀 W_2.
inline Vector grad_mse_1h(const Arch& arch, const ParamVec& p, const Dataset& data) {
  detail::require_depth(arch, 1, "grad_mse_1h");
  if (!arch.activation.is_relu()) throw std::invalid_argument("grad_mse_1h: ReLU only");
  data.validate();
  const auto [d0, d1] = p.layout()[0];
  Vector gw1(d0 * d1, 0.0), gb1(d1, 0.0), gw2(d1, 0.0);
  double gb2 = 0.0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    const std::span<const double> x(data.inputs.row(n), d0);
    const auto st = detail::sample_state(arch, p, x);
    const double e = st.out - data.targets(n, 0);
    const Vector& z = st.zvec[0];
    // (z ⊗ x) e = vec(x [e] zᵀ)
    const Vector t = kron_matvec(detail::column(z), detail::column(x), std::vector<double>{e});
    for (std::size_t i = 0; i < t.size(); ++i) gw1[i] += t[i];
    for (std::size_t c = 0; c < d1; ++c) {
      gb1[c] += z[c] * e;
      gw2[c] += st.a[1][c] * e;
    }
    gb2 += e;
  }
  const double inv_n = 1.0 / static_cast<double>(data.size());
  Vector g;
  for (const Vector* blk : {&gw1, &gb1, &gw2}) g.insert(g.end(), blk->begin(), blk->end());
  g.push_back(gb2);
  for (double& v : g) v *= inv_n;
  return g;
}

/// Four hidden layers, ReLU: ∂L/∂W_j = (1/N) Σ (z_j ⊗ a_{j-1}) e, ∂L/∂b_j = (1/N) Σ z_j e,
/// with the z-vectors built back from the output, z_4 = 𝕀_4 W_5, z_j = 𝕀_j W_{j+1} z_{j+1}.
inline Vector grad_mse_4h(const Arch& arch, const ParamVec& p, const Dataset& data) {
  detail::require_depth(arch, 4, "grad_mse_4h");
  if (!arch.activation.is_relu()) throw std::invalid_argument("grad_mse_4h: ReLU only");
  data.validate();
  Vector g(p.size(), 0.0);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const std::span<const double> x(data.inputs.row(n), arch.input_dim());
    const auto st = detail::sample_state(arch, p, x);
    const double e = st.out - data.targets(n, 0);
    const Vector j = detail::sample_jacobian(p, st);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += j[i] * e;
  }
  for (double& v : g) v /= static_cast<double>(data.size());
  return g;
}

/// One hidden layer Hessian, block by block. For ReLU the only e-weighted
/// blocks are (W_1, W_2) = (𝕀 ⊗ x) e and (b_1, W_2) = 𝕀 e. A smooth
/// activation adds v_c σ''(z_c) [x; 1][x; 1]ᵀ inside each hidden unit.
inline Mat hess_mse_1h(const Arch& arch, const ParamVec& p, const Dataset& data) {
  detail::require_depth(arch, 1, "hess_mse_1h");
  data.validate();
  const auto [d0, d1] = p.layout()[0];
  const std::size_t m = p.size();
  const std::size_t ow1 = 0, ob1 = d0 * d1, ow2 = ob1 + d1, ob2 = ow2 + d1;
  Mat h(m, m);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const std::span<const double> x(data.inputs.row(n), d0);
    const auto st = detail::sample_state(arch, p, x);
    const double e = st.out - data.targets(n, 0);
    const Vector& z = st.zvec[0];
    const Vector& a1 = st.a[1];
    const Vector zx = kron(z, x);
    // Gauss-Newton blocks: J Jᵀ restricted to the upper triangle
    Vector j(m);
    std::copy(zx.begin(), zx.end(), j.begin());
    std::copy(z.begin(), z.end(), j.begin() + static_cast<std::ptrdiff_t>(ob1));
    std::copy(a1.begin(), a1.end(), j.begin() + static_cast<std::ptrdiff_t>(ow2));
    j[ob2] = 1.0;
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = r; c < m; ++c) h(r, c) += j[r] * j[c];
    // ∂²L/∂W_2∂W_1 ∋ (𝕀 ⊗ x) e and ∂²L/∂W_2∂b_1 ∋ 𝕀 e
    for (std::size_t c = 0; c < d1; ++c) {
      const double ind = st.ind[0][c];
      for (std::size_t r = 0; r < d0; ++r) h(ow1 + r + c * d0, ow2 + c) += ind * x[r] * e;
      h(ob1 + c, ow2 + c) += ind * e;
    }
    if (!arch.activation.is_relu()) {
      for (std::size_t c = 0; c < d1; ++c) {
        double zc = p.b(0, c);
        for (std::size_t r = 0; r < d0; ++r) zc += p.w(0, r, c) * x[r];
        const double k2 = e * p.w(1, c, 0) * arch.activation.second(zc);
        for (std::size_t r = 0; r <= d0; ++r) {
          const std::size_t ir = r < d0 ? ow1 + r + c * d0 : ob1 + c;
          const double xr = r < d0 ? x[r] : 1.0;
          for (std::size_t q = r; q <= d0; ++q) {
            const std::size_t iq = q < d0 ? ow1 + q + c * d0 : ob1 + c;
            const double xq = q < d0 ? x[q] : 1.0;
            h(std::min(ir, iq), std::max(ir, iq)) += k2 * xr * xq;
          }
        }
      }
    }
  }
  h *= 1.0 / static_cast<double>(data.size());
  h.mirror_upper();
  return h;
}

/// Four hidden layers Hessian, one sample at a time. Beyond J Jᵀ the e-weighted
/// part couples (W_i, W_j) for i < j through G_{ij} = ∂a_{j-1}/∂z_i:
///   (W_i, W_j): a_{i-1}[r_i] G_{ij}[c_i, r_j] z_j[c_j],   (b_i, W_j): G_{ij}[c_i, r_j] z_j[c_j],
/// with G_{i,i+1} = 𝕀_i and G_{i,j+1} = G_{ij} W_j 𝕀_j. Blocks against b_j (j > i)
/// have no e-weighted part.
inline Mat hess_mse_4h(const Arch& arch, const ParamVec& p, const Dataset& data) {
  detail::require_depth(arch, 4, "hess_mse_4h");
  if (!arch.activation.is_relu()) throw std::invalid_argument("hess_mse_4h: ReLU only");
  data.validate();
  const std::size_t m = p.size();
  const std::size_t depth = arch.depth();
  Mat h(m, m);
  for (std::size_t n = 0; n < data.size(); ++n) {
    const std::span<const double> x(data.inputs.row(n), arch.input_dim());
    const auto st = detail::sample_state(arch, p, x);
    const double e = st.out - data.targets(n, 0);
    const Vector j = detail::sample_jacobian(p, st);
    for (std::size_t r = 0; r < m; ++r) {
      if (j[r] == 0.0) continue;
      for (std::size_t c = r; c < m; ++c) h(r, c) += j[r] * j[c];
    }
    if (e == 0.0) continue;
    for (std::size_t i = 0; i + 1 < depth; ++i) {
      const std::size_t di = p.layout()[i].rows;
      const std::size_t di1 = p.layout()[i].cols;
      Mat g = Mat::diagonal(st.ind[i]);  // G_{i,i+1}
      for (std::size_t jl = i + 1; jl < depth; ++jl) {
        const auto [dj, dj1] = p.layout()[jl];
        for (std::size_t ci = 0; ci < di1; ++ci)
          for (std::size_t rj = 0; rj < dj; ++rj) {
            const double gv = g(ci, rj);
            if (gv == 0.0) continue;
            for (std::size_t cj = 0; cj < dj1; ++cj) {
              const double t = e * gv * st.zvec[jl][cj];
              const std::size_t col = p.weight_offset(jl) + rj + cj * dj;
              for (std::size_t ri = 0; ri < di; ++ri) h(p.weight_offset(i) + ri + ci * di, col) += t * st.a[i][ri];
              h(p.bias_offset(i) + ci, col) += t;
            }
          }
        if (jl + 1 < depth) {
          Mat wj = p.weight(jl);
          for (std::size_t r = 0; r < wj.rows(); ++r)
            for (std::size_t c = 0; c < wj.cols(); ++c) wj(r, c) *= st.ind[jl][c];
          g = matmul(g, wj);
        }
      }
    }
  }
  h *= 1.0 / static_cast<double>(data.size());
  h.mirror_upper();
  return h;
}

// ---------------------------------------------------------------------------
// Finite differences

using ScalarFn = std::function<double(std::span<const double>)>;
using VectorFn = std::function<Vector(std::span<const double>)>;

inline Vector grad_fd(const ScalarFn& f, std::span<const double> w, double h = 1e-6) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_fd: step must be positive");
  Vector x(w.begin(), w.end()), g(w.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Second-order central differences of f, symmetrized.
inline Mat hess_fd(const ScalarFn& f, std::span<const double> w, double h = 1e-4) {
  if (!(h > 0.0)) throw std::invalid_argument("hess_fd: step must be positive");
  const std::size_t m = w.size();
  Vector x(w.begin(), w.end());
  Mat hm(m, m);
  const double f0 = f(x);
  for (std::size_t i = 0; i < m; ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = f(x);
    x[i] = xi - h;
    const double fm = f(x);
    x[i] = xi;
    hm(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (std::size_t j = i + 1; j < m; ++j) {
      const double xj = x[j];
      auto at = [&](double si, double sj) {
        x[i] = xi + si * h;
        x[j] = xj + sj * h;
        const double v = f(x);
        x[i] = xi;
        x[j] = xj;
        return v;
      };
      hm(i, j) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h * h);
    }
  }
  hm.mirror_upper();
  return hm;
}

/// Central differences of an explicit gradient, symmetrized.
inline Mat hess_fd_of_grad(const VectorFn& g, std::span<const double> w, double h = 1e-5) {
  if (!(h > 0.0)) throw std::invalid_argument("hess_fd_of_grad: step must be positive");
  const std::size_t m = w.size();
  Vector x(w.begin(), w.end());
  Mat hm(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const Vector gp = g(x);
    x[i] = xi - h;
    const Vector gm = g(x);
    x[i] = xi;
    for (std::size_t j = 0; j < m; ++j) hm(j, i) = (gp[j] - gm[j]) / (2.0 * h);
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) hm(i, j) = hm(j, i) = 0.5 * (hm(i, j) + hm(j, i));
  return hm;
}

/// Smallest |pre-activation| over all hidden units and samples; an FD check
/// with step h is trusted only when this exceeds 10 h.
inline double min_abs_preactivation(const Arch& arch, const ParamVec& p, const Mat& inputs) {
  const ForwardBatch fb = forward_batch(arch, p, inputs.transpose());
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < arch.depth(); ++k)
    for (double v : fb.pre[k].data()) m = std::min(m, std::abs(v));
  return m;
}

inline double relative_error(std::span<const double> a, std::span<const double> b) {
  const double scale = std::max(norm2(a), norm2(b));
  return scale == 0.0 ? 0.0 : distance(a, b) / scale;
}

inline double relative_error(const Mat& a, const Mat& b) {
  return relative_error(std::span<const double>(a.data()), std::span<const double>(b.data()));
}

// ---------------------------------------------------------------------------
// Multi-scale networks: N(x) = Σ_s N_s(α_s x) over one concatenated vector.
// Subnets share no parameters, so ∇²N is block diagonal and cross-subnet
// blocks of the Hessian are J_s J_tᵀ only.

namespace detail {
inline Mat scaled_inputs(const Mat& inputs, double s) {
  Mat x = inputs;
  x *= s;
  return x;
}
}  // namespace detail

inline Mat msdl_outputs_fm(const MsdlArch& m, const std::vector<ParamVec>& params, const Mat& inputs,
                           std::vector<ForwardBatch>* keep = nullptr) {
  Mat out(m.subnets.front().output_dim(), inputs.rows());
  for (std::size_t s = 0; s < m.subnets.size(); ++s) {
    ForwardBatch fb = forward_batch(m.subnets[s], params[s], detail::scaled_inputs(inputs, m.scales[s]).transpose());
    out += fb.output();
    if (keep) keep->push_back(std::move(fb));
  }
  return out;
}

inline double msdl_loss(const MsdlArch& m, std::span<const double> flat, const Dataset& data) {
  m.validate();
  data.validate();
  const auto params = split_params(m, flat);
  Mat r = msdl_outputs_fm(m, params, data.inputs);
  for (std::size_t c = 0; c < r.rows(); ++c)
    for (std::size_t s = 0; s < r.cols(); ++s) r(c, s) -= data.targets(s, c);
  return half_mean_square(r);
}

inline double msdl_value_and_grad(const MsdlArch& m, std::span<const double> flat, const Dataset& data, Vector& grad) {
  m.validate();
  data.validate();
  const auto params = split_params(m, flat);
  std::vector<ForwardBatch> fbs;
  Mat r = msdl_outputs_fm(m, params, data.inputs, &fbs);
  for (std::size_t c = 0; c < r.rows(); ++c)
    for (std::size_t s = 0; s < r.cols(); ++s) r(c, s) -= data.targets(s, c);
  const double loss = half_mean_square(r);
  r *= 1.0 / static_cast<double>(data.size());
  grad.clear();
  for (std::size_t s = 0; s < m.subnets.size(); ++s) {
    const auto deltas = engine::backprop(m.subnets[s], params[s], fbs[s], r);
    const Vector g = engine::gradient_from_deltas(params[s], fbs[s], deltas);
    grad.insert(grad.end(), g.begin(), g.end());
  }
  return loss;
}

inline Vector msdl_grad(const MsdlArch& m, std::span<const double> flat, const Dataset& data) {
  Vector g;
  msdl_value_and_grad(m, flat, data, g);
  return g;
}

inline Mat msdl_hess(const MsdlArch& m, std::span<const double> flat, const Dataset& data) {
  m.validate();
  data.validate();
  if (m.subnets.front().output_dim() != 1) throw std::invalid_argument("msdl_hess: scalar output required");
  for (const auto& a : m.subnets)
    if (!a.activation.is_relu() && a.depth() != 2)
      throw std::invalid_argument("msdl_hess: smooth subnets must have one hidden layer");
  const auto params = split_params(m, flat);
  std::vector<ForwardBatch> fbs;
  Mat r = msdl_outputs_fm(m, params, data.inputs, &fbs);
  for (std::size_t s = 0; s < r.cols(); ++s) r(0, s) -= data.targets(s, 0);
  const std::size_t n = data.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  Vector coeff(r.data());
  for (double& c : coeff) c *= inv_n;

  const std::size_t total = flat.size();
  Mat jac(n, total);
  Mat h(total, total);
  std::size_t off = 0;
  for (std::size_t s = 0; s < m.subnets.size(); ++s) {
    const auto deltas = engine::backprop(m.subnets[s], params[s], fbs[s], engine::ones_seed(n));
    const Mat js = engine::jacobian(params[s], fbs[s], deltas);
    for (std::size_t i = 0; i < n; ++i) std::copy(js.row(i), js.row(i) + js.cols(), jac.row(i) + off);
    Mat hs(params[s].size(), params[s].size());
    engine::add_curvature_upper(m.subnets[s], params[s], fbs[s], deltas, coeff, hs);
    for (std::size_t i = 0; i < hs.rows(); ++i)
      for (std::size_t j = i; j < hs.cols(); ++j) h(off + i, off + j) += hs(i, j);
    off += params[s].size();
  }
  add_gram_upper(jac, inv_n, h);
  h.mirror_upper();
  return h;
}

}  // namespace mgdl
