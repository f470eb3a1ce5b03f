// Optimizers and training loops: full-batch GD / Adam on any objective,
// SGDL, MGDL (grade-by-grade on residuals), MSDL, and learning-rate sweeps.
#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mgdl/calculus.hpp"

namespace mgdl {

// ---------------------------------------------------------------------------
// Objectives

template <class O>
concept Objective = requires(const O& o, const Vector& w, Vector& g) {
  { o.value(w) } -> std::convertible_to<double>;
  { o.value_and_grad(w, g) } -> std::convertible_to<double>;
  { o.hessian(w) } -> std::convertible_to<Mat>;
};

/// (1/2N) Σ ‖y − N(x)‖² over the full parameter vector (frozen entries get zero gradient).
struct MseObjective {
  Arch arch;
  const Dataset* data;
  std::vector<LayerShape> layout;

  Mat inputs_fm;  // cached transpose, only when nothing is frozen
  mutable MseWorkspace ws;  // scratch: one objective per thread

  MseObjective(Arch a, const Dataset& d) : arch(std::move(a)), data(&d), layout(ParamVec::layout_of(arch)) {
    d.validate();
    if (arch.frozen_depth == 0 && arch.output_dim() == 1) {
      if (d.inputs.cols() != arch.input_dim()) throw std::invalid_argument("MseObjective: input width mismatch");
      inputs_fm = d.inputs.transpose();
    }
  }

  ParamVec wrap(const Vector& w) const { return ParamVec(layout, w); }
  double value(const Vector& w) const { return mse_loss(arch, wrap(w), *data); }
  double value_and_grad(const Vector& w, Vector& g) const {
    if (inputs_fm.size() == 0) return mse_value_and_grad(arch, wrap(w), *data, g);
    return mse_value_and_grad_fm(arch, wrap(w), inputs_fm, data->targets, g, ws);
  }
  Mat hessian(const Vector& w) const { return hess_mse(arch, wrap(w), *data); }
};

struct MsdlObjective {
  MsdlArch arch;
  const Dataset* data;

  double value(const Vector& w) const { return msdl_loss(arch, w, *data); }
  double value_and_grad(const Vector& w, Vector& g) const { return msdl_value_and_grad(arch, w, *data, g); }
  Mat hessian(const Vector& w) const { return msdl_hess(arch, w, *data); }
};

/// F(w) = ½ wᵀ S w − cᵀ w with S symmetric.
struct QuadraticObjective {
  Mat s;
  Vector c;

  explicit QuadraticObjective(Mat sm, Vector cv = {}) : s(std::move(sm)), c(std::move(cv)) {
    if (!s.square()) throw std::invalid_argument("QuadraticObjective: S must be square");
    if (c.empty()) c.assign(s.rows(), 0.0);
  }
  double value(const Vector& w) const { return 0.5 * dot(w, matvec(s, w)) - dot(c, w); }
  double value_and_grad(const Vector& w, Vector& g) const {
    g = matvec(s, w);
    const double v = 0.5 * dot(w, g) - dot(c, w);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= c[i];
    return v;
  }
  Mat hessian(const Vector&) const { return s; }
};

// ---------------------------------------------------------------------------
// Steps

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// W ← W − η ∇F(W)
inline Vector gd_step(std::span<const double> w, std::span<const double> grad, double eta) {
  if (w.size() != grad.size()) throw std::invalid_argument("gd_step: length mismatch");
  if (!all_finite(grad)) throw NonFiniteError("gd_step: non-finite gradient");
  Vector out(w.begin(), w.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= eta * grad[i];
  return out;
}

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m, v;
  std::uint64_t t = 0;
  AdamParams hp{};

  explicit AdamState(std::size_t n = 0, AdamParams p = {}) : m(n, 0.0), v(n, 0.0), hp(p) {}
};

/// Bias-corrected Adam update, in place.
inline void adam_step(AdamState& st, Vector& w, std::span<const double> grad, double eta) {
  if (w.size() != grad.size()) throw std::invalid_argument("adam_step: length mismatch");
  if (!all_finite(grad)) throw NonFiniteError("adam_step: non-finite gradient");
  if (st.m.size() != w.size()) {
    st.m.assign(w.size(), 0.0);
    st.v.assign(w.size(), 0.0);
    st.t = 0;
  }
  ++st.t;
  const double b1 = st.hp.beta1, b2 = st.hp.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));
  for (std::size_t i = 0; i < w.size(); ++i) {
    st.m[i] = b1 * st.m[i] + (1.0 - b1) * grad[i];
    st.v[i] = b2 * st.v[i] + (1.0 - b2) * grad[i] * grad[i];
    const double mh = st.m[i] / c1;
    const double vh = st.v[i] / c2;
    w[i] -= eta * mh / (std::sqrt(vh) + st.hp.eps);
  }
}

// ---------------------------------------------------------------------------
// Loop

enum class Optimizer { GD, Adam };

struct TrainConfig {
  double eta = 1e-2;
  std::size_t epochs = 1000;
  Optimizer optimizer = Optimizer::GD;
  AdamParams adam{};
  std::size_t checkpoint_every = 0;  // 0: max(1, epochs / 200)
  std::uint64_t seed = 1;
  double divergence_threshold = 1e12;
  bool keep_checkpoint_params = false;

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw std::invalid_argument("eta must be > 0");
  }
  std::size_t cadence() const {
    return checkpoint_every ? checkpoint_every : std::max<std::size_t>(1, epochs / 200);
  }
};

struct Checkpoint {
  std::size_t epoch = 0;
  double loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  Vector params;  // filled only with keep_checkpoint_params
};

struct TrainTrace {
  std::vector<double> losses;  // F(W^k) before step k, k = 0..completed-1
  std::vector<Checkpoint> checkpoints;
  bool diverged = false;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::size_t completed() const { return losses.size(); }
};

/// Called at every checkpoint with (epoch k, W^k, F(W^k)).
using Observer = std::function<void(std::size_t, const Vector&, double)>;
/// Optional validation loss evaluated at checkpoints.
using Validator = std::function<double(const Vector&)>;

template <Objective Obj>
TrainTrace run_optimizer(const Obj& obj, Vector& w, const TrainConfig& cfg, const Observer& observe = {},
                         const Validator& validate = {}) {
  cfg.validate();
  TrainTrace tr;
  tr.losses.reserve(cfg.epochs);
  const std::size_t every = cfg.cadence();
  AdamState adam(w.size(), cfg.adam);
  Vector g;
  auto blown = [&](double loss) { return !std::isfinite(loss) || loss > cfg.divergence_threshold; };
  auto checkpoint = [&](std::size_t k, double loss) {
    Checkpoint c{k, loss, std::numeric_limits<double>::quiet_NaN(), {}};
    if (validate) c.val_loss = validate(w);
    if (cfg.keep_checkpoint_params) c.params = w;
    tr.checkpoints.push_back(std::move(c));
    if (observe) observe(k, w, loss);
  };

  for (std::size_t k = 0; k < cfg.epochs; ++k) {
    const double loss = obj.value_and_grad(w, g);
    if (blown(loss) || !all_finite(g)) {
      tr.diverged = true;
      return tr;
    }
    tr.losses.push_back(loss);
    if (k % every == 0) checkpoint(k, loss);
    if (cfg.optimizer == Optimizer::GD) {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.eta * g[i];
    } else {
      adam_step(adam, w, g, cfg.eta);
    }
  }
  const double final_loss = obj.value(w);
  if (blown(final_loss) || !all_finite(w)) {
    tr.diverged = true;
    return tr;
  }
  tr.final_loss = final_loss;
  checkpoint(cfg.epochs, final_loss);
  return tr;
}

// ---------------------------------------------------------------------------
// SGDL

struct SgdlResult {
  ParamVec params;
  TrainTrace trace;
};

inline SgdlResult train_sgdl(const Arch& arch, const Dataset& data, const TrainConfig& cfg,
                             const Dataset* validation = nullptr, std::optional<ParamVec> init = std::nullopt,
                             const Observer& observe = {}) {
  data.validate();
  ParamVec p = init ? std::move(*init) : init_params(arch, cfg.seed);
  require_arch_params(arch, p);
  MseObjective obj(arch, data);
  Validator val;
  if (validation) val = [&](const Vector& w) { return mse_loss(arch, ParamVec(obj.layout, w), *validation); };
  TrainTrace tr = run_optimizer(obj, p.data(), cfg, observe, val);
  return {std::move(p), std::move(tr)};
}

// ---------------------------------------------------------------------------
// MGDL
//
// Grade l trains a shallow net on the frozen features of grades < l, fitting
// the current residual. The residual is normalized by ε_l: the net learns
// e_l / ε_l and contributes g_l = ε_l · N_l. With ε_l = 1 this is the plain
// recursion e_{l+1} = e_l − g_l.

struct Grade {
  Arch arch;        // full grade architecture, frozen prefix included
  ParamVec params;  // full grade parameters
  double epsilon = 1.0;
  TrainTrace trace;

  Arch suffix_arch() const { return trainable_suffix(arch); }
  ParamVec suffix() const { return suffix_params(arch, params); }
};

struct GradeStack {
  std::vector<Grade> grades;
  std::vector<double> residual_norms;  // ‖e_{l+1}‖₂ on the training set after grade l
  bool diverged = false;
  std::optional<TrainTrace> failed_trace;  // trace of the grade that diverged, if any

  bool empty() const { return grades.empty(); }
};

struct MgdlConfig {
  std::string family = "MGDL-1";
  std::size_t grades = 4;
  std::vector<TrainConfig> per_grade;  // one entry, or one per grade
  std::vector<double> epsilons;        // default 1 for every grade

  const TrainConfig& config(std::size_t l) const {
    if (per_grade.empty()) throw std::invalid_argument("MgdlConfig: no training configuration");
    return per_grade.size() == 1 ? per_grade[0] : per_grade.at(l);
  }
  double epsilon(std::size_t l) const { return l < epsilons.size() ? epsilons[l] : 1.0; }
};

/// Features fed to grade l+1: the last hidden layer of grade l, computed from grade l's inputs.
inline Mat next_grade_features(const Grade& g, const Mat& grade_inputs) {
  const Arch sa = g.suffix_arch();
  return hidden_features_batch(sa, g.suffix(), grade_inputs, sa.depth() - 1);
}

/// Observer for grade runs: (grade index, epoch, trainable arch, grade data, trainable params, loss).
using GradeObserver =
    std::function<void(std::size_t, std::size_t, const Arch&, const Dataset&, const Vector&, double)>;

inline GradeStack train_mgdl(const MgdlConfig& mc, const Dataset& data, const Dataset* validation = nullptr,
                             const GradeObserver& observe = {}) {
  data.validate();
  if (mc.grades < 1) throw std::invalid_argument("train_mgdl: need at least one grade");
  GradeStack stack;
  Mat feats = data.inputs;
  Mat resid = data.targets;
  std::optional<Mat> val_feats, val_resid;
  if (validation) {
    val_feats = validation->inputs;
    val_resid = validation->targets;
  }

  for (std::size_t l = 0; l < mc.grades; ++l) {
    const TrainConfig& cfg = mc.config(l);
    const double eps = mc.epsilon(l);
    if (!(eps > 0.0)) throw std::invalid_argument("train_mgdl: epsilon must be > 0");
    Grade g;
    g.arch = preset_arch(mc.family, l + 1);
    g.epsilon = eps;
    g.params = ParamVec::zeros(g.arch);
    if (l > 0) {
      // frozen prefix = previous grade minus its output layer
      const ParamVec& prev = stack.grades.back().params;
      const std::size_t keep = prev.layer_end(prev.layers() - 2);
      std::copy(prev.data().begin(), prev.data().begin() + static_cast<std::ptrdiff_t>(keep), g.params.data().begin());
    }
    const Arch sa = g.suffix_arch();
    Mat scaled = resid;
    scaled *= 1.0 / eps;
    const Dataset grade_data{feats, scaled};
    std::optional<Dataset> grade_val;
    if (validation) {
      Mat vs = *val_resid;
      vs *= 1.0 / eps;
      grade_val = Dataset{*val_feats, vs};
    }
    TrainConfig gcfg = cfg;
    gcfg.seed = stream_seed(cfg.seed, 0x6772616465ULL + l);
    Observer obs;
    if (observe)
      obs = [&, l](std::size_t k, const Vector& w, double loss) { observe(l, k, sa, grade_data, w, loss); };
    SgdlResult r = train_sgdl(sa, grade_data, gcfg, grade_val ? &*grade_val : nullptr, std::nullopt, obs);
    if (r.trace.diverged) {
      stack.diverged = true;
      stack.failed_trace = std::move(r.trace);
      return stack;
    }
    assign_suffix(g.arch, g.params, r.params);
    g.trace = std::move(r.trace);

    // e_{l+1} = e_l − ε_l N_l
    auto update = [&](const Mat& x, Mat& e) {
      const ForwardBatch fb = forward_batch(sa, r.params, x.transpose());
      for (std::size_t i = 0; i < e.rows(); ++i) e(i, 0) -= eps * fb.output()(0, i);
    };
    update(feats, resid);
    if (validation) update(*val_feats, *val_resid);
    stack.residual_norms.push_back(resid.frobenius_norm());
    if (l + 1 < mc.grades) {
      feats = next_grade_features(g, feats);
      if (validation) val_feats = next_grade_features(g, *val_feats);
    }
    stack.grades.push_back(std::move(g));
  }
  return stack;
}

/// ḡ_L(x) = Σ_l ε_l N_l(features_l(x)) for each row of `inputs`.
inline Vector mgdl_predict(const GradeStack& stack, const Mat& inputs) {
  if (stack.empty()) throw std::invalid_argument("mgdl_predict: empty stack");
  Vector out(inputs.rows(), 0.0);
  Mat feats = inputs;
  for (std::size_t l = 0; l < stack.grades.size(); ++l) {
    const Grade& g = stack.grades[l];
    const ForwardBatch fb = forward_batch(g.suffix_arch(), g.suffix(), feats.transpose());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += g.epsilon * fb.output()(0, i);
    if (l + 1 < stack.grades.size()) feats = next_grade_features(g, feats);
  }
  return out;
}

inline Vector mgdl_predict(const GradeStack& stack, std::span<const double> x) {
  return mgdl_predict(stack, Mat(1, x.size(), Vector(x.begin(), x.end())));
}

inline double mgdl_loss(const GradeStack& stack, const Dataset& data) {
  const Vector pred = mgdl_predict(stack, data.inputs);
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - data.targets(i, 0);
    s += e * e;
  }
  return s / (2.0 * static_cast<double>(pred.size()));
}

// ---------------------------------------------------------------------------
// MSDL

struct MsdlResult {
  Vector params;  // concatenated subnets
  TrainTrace trace;
};

inline MsdlResult train_msdl(const MsdlArch& m, const Dataset& data, const TrainConfig& cfg,
                             const Dataset* validation = nullptr, const Observer& observe = {}) {
  m.validate();
  data.validate();
  Vector w = concat_params(init_msdl_params(m, cfg.seed));
  MsdlObjective obj{m, &data};
  Validator val;
  if (validation) val = [&](const Vector& x) { return msdl_loss(m, x, *validation); };
  TrainTrace tr = run_optimizer(obj, w, cfg, observe, val);
  return {std::move(w), std::move(tr)};
}

// ---------------------------------------------------------------------------
// Learning-rate sweeps

struct SweepRow {
  double eta = 0.0;
  double train_loss = std::numeric_limits<double>::quiet_NaN();
  double val_loss = std::numeric_limits<double>::quiet_NaN();
  bool diverged = false;
};

/// Runs `run(eta)` independently for each η; the runner owns its seed/init.
template <class Runner>
std::vector<SweepRow> lr_sweep(Runner&& run, std::span<const double> etas) {
  if (etas.empty()) throw std::invalid_argument("lr_sweep: no learning rates");
  std::vector<SweepRow> rows;
  for (double eta : etas) {
    SweepRow r = run(eta);
    r.eta = eta;
    rows.push_back(r);
  }
  return rows;
}

/// Row with the lowest validation loss; ties go to the smaller η. Diverged rows never win.
inline std::optional<SweepRow> best_row(const std::vector<SweepRow>& rows) {
  std::optional<SweepRow> best;
  for (const auto& r : rows) {
    if (r.diverged || !std::isfinite(r.val_loss)) continue;
    if (!best || r.val_loss < best->val_loss || (r.val_loss == best->val_loss && r.eta < best->eta)) best = r;
  }
  return best;
}

/// n log-spaced points on [lo, hi], endpoints included.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi >= lo) || n == 0) throw std::invalid_argument("log_grid: bad range");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    g[i] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
  }
  if (n > 1) g.back() = hi;
  g.front() = lo;
  return g;
}

}  // namespace mgdl
