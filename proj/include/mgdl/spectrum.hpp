// Spectrum of the GD iteration matrix A = I − ηH along a training run, and
// the linearized GD surrogate
//
//   W̃^{k+1} = A^{k−1} W̃^k − η u^{k−1},   u^k = ∇F(W^k) − H(W^k) W^k,
//
// driven by the matrices of the full GD trajectory, started from W̃^0 = W^0
// and W̃^1 = W^1.
//
// α̂ and τ̂ are maxima over the recorded checkpoints only. They are lower
// estimates of the suprema over the (unknown) compact set the theory assumes.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mgdl/training.hpp"

namespace mgdl {

inline Mat iteration_matrix(const Mat& h, double eta) {
  if (!h.square()) throw std::invalid_argument("iteration_matrix: H must be square");
  Mat a = h;
  a *= -eta;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += 1.0;
  return a;
}

struct SpectrumRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  Vector smallest;  // ascending
  Vector largest;   // descending
  double alpha_running = 0.0;
  double tau_running = 0.0;
  bool failed = false;  // eigensolver did not converge at this checkpoint
};

struct SpectrumTrace {
  double eta = 0.0;
  std::size_t k = 10;
  std::vector<SpectrumRecord> records;

  double alpha_hat() const { return records.empty() ? 0.0 : records.back().alpha_running; }
  double tau_hat() const { return records.empty() ? 0.0 : records.back().tau_running; }
  double min_eigenvalue() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& r : records)
      if (!r.smallest.empty()) m = std::min(m, r.smallest.front());
    return m;
  }
  double max_eigenvalue() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& r : records)
      if (!r.largest.empty()) m = std::max(m, r.largest.front());
    return m;
  }
};

/// Accumulates checkpoint spectra of I − ηH.
class SpectrumTracker {
 public:
  SpectrumTracker(double eta, std::size_t k = 10) { trace_.eta = eta, trace_.k = k; }

  void record(std::size_t epoch, const Mat& h, double loss) {
    SpectrumRecord r;
    r.epoch = epoch;
    r.loss = loss;
    const double prev_alpha = trace_.records.empty() ? 0.0 : trace_.records.back().alpha_running;
    const double prev_tau = trace_.records.empty() ? 0.0 : trace_.records.back().tau_running;
    try {
      const EigenResult er = sym_eig(iteration_matrix(h, trace_.eta));
      const Vector& v = er.values;
      const std::size_t kk = std::min(trace_.k, v.size());
      r.smallest.assign(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(kk));
      r.largest.assign(v.rbegin(), v.rbegin() + static_cast<std::ptrdiff_t>(kk));
      double alpha = 0.0, tau = 0.0;
      for (double lam : v) tau = std::max(tau, std::abs(lam));
      if (trace_.eta > 0.0) {
        // eig(H) = (1 − eig(A)) / η
        for (double lam : v) alpha = std::max(alpha, std::abs(1.0 - lam) / trace_.eta);
      } else {
        for (double lam : sym_eig(h).values) alpha = std::max(alpha, std::abs(lam));
      }
      r.alpha_running = std::max(prev_alpha, alpha);
      r.tau_running = std::max(prev_tau, tau);
    } catch (const ConvergenceError& e) {
      log_warning(std::string("spectrum at epoch ") + std::to_string(epoch) + ": " + e.what());
      r.failed = true;
      r.alpha_running = prev_alpha;
      r.tau_running = prev_tau;
    }
    trace_.records.push_back(std::move(r));
  }

  const SpectrumTrace& trace() const { return trace_; }
  SpectrumTrace take() { return std::move(trace_); }

 private:
  SpectrumTrace trace_;
};

struct SpectrumRun {
  Vector params;
  TrainTrace train;
  SpectrumTrace spectrum;
};

/// Full-batch GD with the spectrum of I − ηH recorded at every checkpoint.
template <Objective Obj>
SpectrumRun track_spectrum(const Obj& obj, Vector w0, const TrainConfig& cfg, std::size_t k = 10) {
  if (cfg.optimizer != Optimizer::GD) throw std::invalid_argument("track_spectrum: plain GD only");
  SpectrumTracker tracker(cfg.eta, k);
  Observer obs = [&](std::size_t epoch, const Vector& w, double loss) { tracker.record(epoch, obj.hessian(w), loss); };
  TrainTrace tr = run_optimizer(obj, w0, cfg, obs);
  return {std::move(w0), std::move(tr), tracker.take()};
}

struct AlphaTau {
  double alpha_hat = 0.0;
  double tau_hat = 0.0;
};

inline AlphaTau estimate_alpha_tau(const SpectrumTrace& t) {
  if (t.records.empty()) throw std::invalid_argument("estimate_alpha_tau: empty trace");
  return {t.alpha_hat(), t.tau_hat()};
}

/// α̂ and τ̂ straight from Hessians (for callers that hold H rather than a trace).
inline AlphaTau alpha_tau_of(const std::vector<Mat>& hessians, double eta) {
  AlphaTau at;
  for (const Mat& h : hessians) {
    const EigenResult er = sym_eig(h);
    for (double lam : er.values) {
      at.alpha_hat = std::max(at.alpha_hat, std::abs(lam));
      at.tau_hat = std::max(at.tau_hat, std::abs(1.0 - eta * lam));
    }
  }
  return at;
}

// ---------------------------------------------------------------------------
// Linearized surrogate

struct SurrogateState {
  Vector w_tilde;  // W̃^k
  Vector w_prev;   // W^{k−1}
  Vector g_prev;   // ∇F(W^{k−1})
  Mat h_prev;      // H(W^{k−1})
};

/// W̃^{k+1} = (I − η H^{k−1}) W̃^k − η (∇F^{k−1} − H^{k−1} W^{k−1})
inline Vector linearized_step(const SurrogateState& s, double eta) {
  const std::size_t m = s.w_tilde.size();
  if (s.w_prev.size() != m || s.g_prev.size() != m || s.h_prev.rows() != m)
    throw std::invalid_argument("linearized_step: inconsistent state");
  const Vector hw_tilde = matvec(s.h_prev, s.w_tilde);
  const Vector hw_prev = matvec(s.h_prev, s.w_prev);
  Vector next(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double u = s.g_prev[i] - hw_prev[i];
    next[i] = s.w_tilde[i] - eta * hw_tilde[i] - eta * u;
  }
  if (!all_finite(next)) throw NonFiniteError("linearized_step: non-finite surrogate state");
  return next;
}

struct JointRun {
  Vector w_full;       // W^K
  Vector w_surrogate;  // W̃^K
  std::vector<double> gaps;    // ‖W̃^k − W^k‖, k = 0..K
  std::vector<double> losses;  // F(W^k)
  double alpha_hat = 0.0;
  double tau_hat = 0.0;
  bool diverged = false;
};

/// Runs full GD and the surrogate side by side for K steps. Computes a
/// Hessian and its spectrum per step, so it is meant for small nets.
template <Objective Obj>
JointRun run_joint(const Obj& obj, Vector w0, double eta, std::size_t steps) {
  JointRun jr;
  Vector w = std::move(w0);
  Vector g;
  double loss = obj.value_and_grad(w, g);
  Mat h = obj.hessian(w);
  auto track = [&](const Mat& hm) {
    for (double lam : sym_eig(hm).values) {
      jr.alpha_hat = std::max(jr.alpha_hat, std::abs(lam));
      jr.tau_hat = std::max(jr.tau_hat, std::abs(1.0 - eta * lam));
    }
  };
  track(h);
  jr.losses.push_back(loss);
  jr.gaps.push_back(0.0);  // W̃^0 = W^0

  SurrogateState s;
  Vector w_tilde = w;
  for (std::size_t k = 0; k < steps; ++k) {
    // surrogate step uses the matrices at W^{k−1}; the first step copies W^1
    Vector next_tilde;
    if (k == 0) {
      next_tilde = gd_step(w, g, eta);
    } else {
      s.w_tilde = w_tilde;
      next_tilde = linearized_step(s, eta);
    }
    s.w_prev = w;
    s.g_prev = g;
    s.h_prev = h;
    w = gd_step(w, g, eta);
    w_tilde = std::move(next_tilde);

    loss = obj.value_and_grad(w, g);
    if (!std::isfinite(loss) || loss > 1e12 || !all_finite(g)) {
      jr.diverged = true;
      break;
    }
    h = obj.hessian(w);
    track(h);
    jr.losses.push_back(loss);
    jr.gaps.push_back(distance(w_tilde, w));
  }
  jr.w_full = std::move(w);
  jr.w_surrogate = std::move(w_tilde);
  return jr;
}

struct LimitReport {
  bool applicable = false;  // τ̂ < 1 and the full run did not diverge
  double gap = std::numeric_limits<double>::quiet_NaN();
  double full_norm = 0.0;
  double bound = 0.0;  // tol · (1 + ‖W^K‖)
  bool within = false;
  std::vector<double> gap_series;
};

inline LimitReport compare_limits(const JointRun& jr, double tol) {
  LimitReport r;
  r.gap_series = jr.gaps;
  r.applicable = !jr.diverged && jr.tau_hat < 1.0;
  if (jr.diverged) return r;
  r.gap = distance(jr.w_surrogate, jr.w_full);
  r.full_norm = norm2(jr.w_full);
  r.bound = tol * (1.0 + r.full_norm);
  r.within = r.gap <= r.bound;
  return r;
}

}  // namespace mgdl
