// Convex reformulation of a two-layer ReLU fit with weight decay:
//
//   min  ½‖Σ_j α_j (X w_j)_+ − e‖² + (β/2) Σ_j (‖w_j‖² + α_j²)
//
// equals the group-lasso program over activation patterns D_i = diag(1[X h ≥ 0]):
//
//   min  ½‖Σ_i D_i X (u_i − v_i) − e‖² + β Σ_i (‖u_i‖ + ‖v_i‖)
//   s.t. (2D_i − I) X u_i ≥ 0,  (2D_i − I) X v_i ≥ 0.
//
// The constrained program is solved by monotone accelerated proximal
// gradient. The prox of β‖·‖ + (cone indicator) is "project onto the cone,
// then group-shrink"; the polyhedral cone projection is exact, by enumerating
// active sets (fine for d ≤ 3, N ≤ 12).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mgdl/numerics.hpp"
#include "mgdl/rng.hpp"

namespace mgdl {

struct ArrangementPattern {
  std::vector<std::uint8_t> mask;  // diagonal of D
  Vector witness;                  // 1[X witness ≥ 0] == mask
};

namespace detail {
inline std::vector<std::uint8_t> mask_of(const Mat& x, std::span<const double> w) {
  std::vector<std::uint8_t> m(x.rows());
  for (std::size_t n = 0; n < x.rows(); ++n) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) s += x(n, c) * w[c];
    m[n] = s >= 0.0 ? 1 : 0;
  }
  return m;
}

struct PatternSet {
  const Mat& x;
  std::set<std::vector<std::uint8_t>> seen;
  std::vector<ArrangementPattern> out;
  void add(const Vector& w) {
    auto m = mask_of(x, w);
    if (seen.insert(m).second) out.push_back({std::move(m), w});
  }
};
}  // namespace detail

/// Realizable masks 1[Xw ≥ 0]. Exact for d ≤ 2; sampled for d = 3.
inline std::vector<ArrangementPattern> enumerate_patterns(const Mat& x, std::uint64_t seed = 1) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n == 0 || d == 0) throw std::invalid_argument("enumerate_patterns: empty data");
  if (d > 3) throw std::invalid_argument("enumerate_patterns: d > 3 is not supported");
  detail::PatternSet ps{x, {}, {}};
  ps.add(Vector(d, 0.0));  // all ones
  if (d == 1) {
    ps.add({1.0});
    ps.add({-1.0});
  } else if (d == 2) {
    // the mask only changes where w ⟂ x_n; visit every critical angle and every arc between them
    std::vector<double> crit;
    for (std::size_t r = 0; r < n; ++r) {
      if (x(r, 0) == 0.0 && x(r, 1) == 0.0) continue;
      const double a = std::atan2(x(r, 1), x(r, 0));
      for (double s : {-1.0, 1.0}) {
        double t = a + s * M_PI / 2.0;
        t = std::remainder(t, 2.0 * M_PI);
        crit.push_back(t);
      }
    }
    std::sort(crit.begin(), crit.end());
    if (crit.empty()) crit.push_back(0.0);
    for (std::size_t i = 0; i < crit.size(); ++i) {
      const double a = crit[i];
      const double b = i + 1 < crit.size() ? crit[i + 1] : crit[0] + 2.0 * M_PI;
      const double mid = 0.5 * (a + b);
      ps.add({std::cos(mid), std::sin(mid)});
    }
    // on-boundary directions, exactly perpendicular to x_n so the tie lands on the ≥ side
    for (std::size_t r = 0; r < n; ++r) {
      if (x(r, 0) == 0.0 && x(r, 1) == 0.0) continue;
      ps.add({-x(r, 1), x(r, 0)});
      ps.add({x(r, 1), -x(r, 0)});
    }
  } else {
    SplitMix64 rng(stream_seed(seed, 0x617272ULL));
    const std::size_t samples = std::max<std::size_t>(1000, 10 * n * (n - 1));
    for (std::size_t s = 0; s < samples; ++s) ps.add({rng.normal(), rng.normal(), rng.normal()});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const Vector c{x(i, 1) * x(j, 2) - x(i, 2) * x(j, 1), x(i, 2) * x(j, 0) - x(i, 0) * x(j, 2),
                       x(i, 0) * x(j, 1) - x(i, 1) * x(j, 0)};
        const double cn = norm2(c);
        if (cn == 0.0) continue;
        const double xi = norm2(std::span<const double>(x.row(i), d));
        const double xj = norm2(std::span<const double>(x.row(j), d));
        for (double sc : {-1.0, 1.0})
          for (double si : {-1.0, 0.0, 1.0})
            for (double sj : {-1.0, 0.0, 1.0}) {
              Vector w(3);
              for (std::size_t k = 0; k < 3; ++k)
                w[k] = sc * c[k] / cn + 1e-6 * (si * x(i, k) / std::max(xi, 1e-300) + sj * x(j, k) / std::max(xj, 1e-300));
              ps.add(w);
            }
      }
  }
  return std::move(ps.out);
}

// ---------------------------------------------------------------------------
// Exact projection onto {u : A u ≥ 0} for small d.

namespace detail {
/// Solve the k x k system G y = b in place (Gaussian elimination, partial pivoting). False if singular.
inline bool small_solve(std::vector<double> g, std::vector<double>& b, std::size_t k) {
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r)
      if (std::abs(g[r * k + c]) > std::abs(g[piv * k + c])) piv = r;
    if (std::abs(g[piv * k + c]) < 1e-12) return false;
    if (piv != c) {
      for (std::size_t j = 0; j < k; ++j) std::swap(g[c * k + j], g[piv * k + j]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < k; ++r) {
      const double f = g[r * k + c] / g[c * k + c];
      for (std::size_t j = c; j < k; ++j) g[r * k + j] -= f * g[c * k + j];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = k; c-- > 0;) {
    for (std::size_t j = c + 1; j < k; ++j) b[c] -= g[c * k + j] * b[j];
    b[c] /= g[c * k + c];
  }
  return true;
}

inline double min_constraint(const Mat& a, std::span<const double> u) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) s += a(r, c) * u[c];
    m = std::min(m, s);
  }
  return a.rows() ? m : 0.0;
}
}  // namespace detail

/// Euclidean projection of z onto the polyhedral cone {u : A u ≥ 0}.
/// Enumerates active sets of size ≤ d; the closest feasible candidate is the projection.
inline Vector project_cone(const Mat& a, std::span<const double> z) {
  const std::size_t n = a.rows(), d = a.cols();
  if (z.size() != d) throw std::invalid_argument("project_cone: dimension mismatch");
  const double feas_tol = 1e-12 * (1.0 + norm2(z));
  Vector best(z.begin(), z.end());
  if (detail::min_constraint(a, best) >= -feas_tol) return best;
  double best_dist = std::numeric_limits<double>::infinity();
  best.assign(d, 0.0);  // the apex is always feasible
  best_dist = norm2(z);

  std::vector<std::size_t> idx;
  auto try_set = [&]() {
    const std::size_t k = idx.size();
    std::vector<double> g(k * k), rhs(k);
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) s += a(idx[i], c) * a(idx[j], c);
        g[i * k + j] = s;
      }
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += a(idx[i], c) * z[c];
      rhs[i] = s;
    }
    if (!detail::small_solve(g, rhs, k)) return;
    Vector u(z.begin(), z.end());
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t c = 0; c < d; ++c) u[c] -= rhs[i] * a(idx[i], c);
    if (detail::min_constraint(a, u) < -feas_tol) return;
    const double dist = distance(u, Vector(z.begin(), z.end()));
    if (dist < best_dist) {
      best_dist = dist;
      best = std::move(u);
    }
  };
  const std::size_t kmax = std::min(d, n);
  auto rec = [&](auto&& self, std::size_t start) -> void {
    if (!idx.empty()) try_set();
    if (idx.size() == kmax) return;
    for (std::size_t r = start; r < n; ++r) {
      idx.push_back(r);
      self(self, r + 1);
      idx.pop_back();
    }
  };
  rec(rec, 0);
  return best;
}

// ---------------------------------------------------------------------------
// Convex program

struct ConvexSolution {
  std::vector<ArrangementPattern> patterns;
  std::vector<Vector> u, v;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double constraint_residual = 0.0;  // max violation, ≥ 0
  std::size_t iterations = 0;
  bool converged = false;
};

struct ConvexOptions {
  std::size_t max_iter = 100000;
  double tol = 1e-10;  // fixed-point residual of the prox map
};

namespace detail {
struct ConvexProblem {
  const Mat& x;
  const Vector& e;
  double beta;
  const std::vector<ArrangementPattern>& pats;
  std::vector<Mat> cone;  // (2D_i − I) X
  std::size_t d;

  ConvexProblem(const Mat& xx, const Vector& ee, double b, const std::vector<ArrangementPattern>& p)
      : x(xx), e(ee), beta(b), pats(p), d(xx.cols()) {
    for (const auto& pt : pats) {
      Mat a = x;
      for (std::size_t n = 0; n < x.rows(); ++n)
        if (!pt.mask[n])
          for (std::size_t c = 0; c < d; ++c) a(n, c) = -a(n, c);
      cone.push_back(std::move(a));
    }
  }
  std::size_t blocks() const { return 2 * pats.size(); }
  // z layout: [u_0, v_0, u_1, v_1, ...], each of length d
  Vector predict(const Vector& z) const {
    Vector y(x.rows(), 0.0);
    for (std::size_t i = 0; i < pats.size(); ++i)
      for (std::size_t n = 0; n < x.rows(); ++n) {
        if (!pats[i].mask[n]) continue;
        for (std::size_t c = 0; c < d; ++c) y[n] += x(n, c) * (z[(2 * i) * d + c] - z[(2 * i + 1) * d + c]);
      }
    return y;
  }
  double smooth(const Vector& z, Vector* grad) const {
    Vector r = predict(z);
    for (std::size_t n = 0; n < r.size(); ++n) r[n] -= e[n];
    if (grad) {
      grad->assign(z.size(), 0.0);
      for (std::size_t i = 0; i < pats.size(); ++i)
        for (std::size_t n = 0; n < x.rows(); ++n) {
          if (!pats[i].mask[n]) continue;
          for (std::size_t c = 0; c < d; ++c) {
            (*grad)[(2 * i) * d + c] += x(n, c) * r[n];
            (*grad)[(2 * i + 1) * d + c] -= x(n, c) * r[n];
          }
        }
    }
    return 0.5 * dot(r, r);
  }
  double regularizer(const Vector& z) const {
    double s = 0.0;
    for (std::size_t b = 0; b < blocks(); ++b) s += norm2(std::span<const double>(z).subspan(b * d, d));
    return beta * s;
  }
  double objective(const Vector& z) const { return smooth(z, nullptr) + regularizer(z); }
  Vector prox(const Vector& y, double t) const {
    Vector out(y.size());
    for (std::size_t b = 0; b < blocks(); ++b) {
      Vector p = project_cone(cone[b / 2], std::span<const double>(y).subspan(b * d, d));
      const double nrm = norm2(p);
      const double shrink = nrm > 0.0 ? std::max(0.0, 1.0 - t * beta / nrm) : 0.0;
      for (std::size_t c = 0; c < d; ++c) out[b * d + c] = shrink * p[c];
    }
    return out;
  }
  double lipschitz() const {
    // ‖M‖² with M: z -> prediction; M Mᵀ = 2 Σ_i D_i X Xᵀ D_i
    const std::size_t n = x.rows();
    Mat g(n, n);
    for (const auto& pt : pats)
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
          if (!pt.mask[a] || !pt.mask[b]) continue;
          double s = 0.0;
          for (std::size_t c = 0; c < d; ++c) s += x(a, c) * x(b, c);
          g(a, b) += 2.0 * s;
        }
    return std::max(spectral_norm(g), 1e-12);
  }
};
}  // namespace detail

inline ConvexSolution solve_convex_program(const Mat& x, const Vector& e, double beta,
                                           std::vector<ArrangementPattern> patterns, const ConvexOptions& opt = {}) {
  if (e.size() != x.rows()) throw std::invalid_argument("solve_convex_program: target length mismatch");
  if (!(beta >= 0.0)) throw std::invalid_argument("solve_convex_program: beta must be >= 0");
  if (patterns.empty()) throw std::invalid_argument("solve_convex_program: no patterns");
  ConvexSolution sol;
  sol.patterns = std::move(patterns);
  const detail::ConvexProblem pb(x, e, beta, sol.patterns);
  const std::size_t dim = pb.blocks() * pb.d;
  const double t = 1.0 / pb.lipschitz();

  // monotone FISTA: keeps the best of the prox step and the previous iterate
  Vector xk(dim, 0.0), yk = xk, g;
  double fk = pb.objective(xk);
  double tk = 1.0;
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    pb.smooth(yk, &g);
    Vector step(dim);
    for (std::size_t i = 0; i < dim; ++i) step[i] = yk[i] - t * g[i];
    Vector zk = pb.prox(step, t);
    const double fz = pb.objective(zk);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    Vector xn = fz <= fk ? zk : xk;
    const double fn = std::min(fz, fk);
    for (std::size_t i = 0; i < dim; ++i)
      yk[i] = xn[i] + (tk / tn) * (zk[i] - xn[i]) + ((tk - 1.0) / tn) * (xn[i] - xk[i]);
    xk = std::move(xn);
    fk = fn;
    tk = tn;
    sol.iterations = it + 1;

    if (it % 50 == 49) {
      // fixed-point residual at the current iterate
      pb.smooth(xk, &g);
      for (std::size_t i = 0; i < dim; ++i) step[i] = xk[i] - t * g[i];
      const Vector px = pb.prox(step, t);
      if (distance(px, xk) / t <= opt.tol * (1.0 + norm2(e))) {
        sol.converged = true;
        break;
      }
    }
  }
  sol.u.resize(sol.patterns.size());
  sol.v.resize(sol.patterns.size());
  for (std::size_t i = 0; i < sol.patterns.size(); ++i) {
    sol.u[i].assign(xk.begin() + static_cast<std::ptrdiff_t>(2 * i * pb.d),
                    xk.begin() + static_cast<std::ptrdiff_t>((2 * i + 1) * pb.d));
    sol.v[i].assign(xk.begin() + static_cast<std::ptrdiff_t>((2 * i + 1) * pb.d),
                    xk.begin() + static_cast<std::ptrdiff_t>((2 * i + 2) * pb.d));
    sol.constraint_residual = std::max(sol.constraint_residual, -detail::min_constraint(pb.cone[i], sol.u[i]));
    sol.constraint_residual = std::max(sol.constraint_residual, -detail::min_constraint(pb.cone[i], sol.v[i]));
  }
  sol.objective = fk;
  if (!sol.converged) log_warning("solve_convex_program: iteration cap reached");
  return sol;
}

inline double convex_objective(const Mat& x, const Vector& e, double beta, const ConvexSolution& sol) {
  Vector z;
  for (std::size_t i = 0; i < sol.patterns.size(); ++i) {
    z.insert(z.end(), sol.u[i].begin(), sol.u[i].end());
    z.insert(z.end(), sol.v[i].begin(), sol.v[i].end());
  }
  return detail::ConvexProblem(x, e, beta, sol.patterns).objective(z);
}

// ---------------------------------------------------------------------------
// Two-layer network

struct TwoLayerNet {
  Mat w;         // m x d, one neuron per row
  Vector alpha;  // m
  std::size_t width() const { return alpha.size(); }
};

inline constexpr double kZeroBlock = 1e-13;

/// One neuron per nonzero u_i (w = u/√‖u‖, α = √‖u‖) and per nonzero v_i (α negative).
inline TwoLayerNet reconstruct_network(const ConvexSolution& sol, std::size_t* m_star = nullptr) {
  const std::size_t d = sol.u.empty() ? 0 : sol.u[0].size();
  std::vector<Vector> rows;
  Vector alpha;
  auto add = [&](const Vector& b, double sign) {
    const double nb = norm2(b);
    if (nb <= kZeroBlock) return;
    const double s = std::sqrt(nb);
    Vector r(b);
    for (double& x : r) x /= s;
    rows.push_back(std::move(r));
    alpha.push_back(sign * s);
  };
  for (std::size_t i = 0; i < sol.u.size(); ++i) {
    add(sol.u[i], 1.0);
    add(sol.v[i], -1.0);
  }
  TwoLayerNet net{Mat(rows.size(), d), alpha};
  for (std::size_t j = 0; j < rows.size(); ++j) std::copy(rows[j].begin(), rows[j].end(), net.w.row(j));
  if (m_star) *m_star = rows.size();
  return net;
}

inline Vector two_layer_predict(const Mat& x, const TwoLayerNet& net) {
  Vector y(x.rows(), 0.0);
  for (std::size_t j = 0; j < net.width(); ++j)
    for (std::size_t n = 0; n < x.rows(); ++n) {
      double s = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) s += x(n, c) * net.w(j, c);
      if (s > 0.0) y[n] += net.alpha[j] * s;
    }
  return y;
}

/// ½‖Σ_j α_j (X w_j)_+ − e‖² + (β/2) Σ_j (‖w_j‖² + α_j²)
inline double nonconvex_objective(const Mat& x, const Vector& e, double beta, const TwoLayerNet& net) {
  if (e.size() != x.rows()) throw std::invalid_argument("nonconvex_objective: target length mismatch");
  if (net.width() && net.w.cols() != x.cols()) throw std::invalid_argument("nonconvex_objective: width mismatch");
  Vector r = two_layer_predict(x, net);
  for (std::size_t n = 0; n < r.size(); ++n) r[n] -= e[n];
  double reg = 0.0;
  for (double v : net.w.data()) reg += v * v;
  for (double a : net.alpha) reg += a * a;
  return 0.5 * dot(r, r) + 0.5 * beta * reg;
}

// tau > 0 swaps (z)_+ for tau * softplus(z / tau), which is smooth and
// within tau * log 2 of the ReLU
inline double nonconvex_value_and_grad(const Mat& x, const Vector& e, double beta, const TwoLayerNet& net,
                                       TwoLayerNet& grad, double tau = 0.0) {
  const std::size_t m = net.width(), d = x.cols(), n = x.rows();
  Mat act(m, n), slope(m, n);
  Vector r(n, 0.0);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += x(k, c) * net.w(j, c);
      if (tau > 0.0) {
        const double z = s / tau;
        act(j, k) = tau * (z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)));
        slope(j, k) = 1.0 / (1.0 + std::exp(-z));
      } else {
        act(j, k) = std::max(s, 0.0);
        slope(j, k) = s >= 0.0 ? 1.0 : 0.0;  // ReLU'(0) = 1
      }
      r[k] += net.alpha[j] * act(j, k);
    }
  for (std::size_t k = 0; k < n; ++k) r[k] -= e[k];
  grad.w = net.w;
  grad.w *= beta;
  grad.alpha = net.alpha;
  for (double& a : grad.alpha) a *= beta;
  double reg = 0.0;
  for (double v : net.w.data()) reg += v * v;
  for (double a : net.alpha) reg += a * a;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < n; ++k) {
      grad.alpha[j] += r[k] * act(j, k);
      const double t = r[k] * net.alpha[j] * slope(j, k);
      if (t != 0.0)
        for (std::size_t c = 0; c < d; ++c) grad.w(j, c) += t * x(k, c);
    }
  return 0.5 * dot(r, r) + 0.5 * beta * reg;
}

struct NonconvexOracle {
  double best = std::numeric_limits<double>::infinity();
  std::size_t width = 0;
  std::size_t restarts = 0;
  TwoLayerNet best_net;
};

struct NonconvexOptions {
  std::size_t restarts = 50;
  std::size_t max_iter = 20000;
  double grad_tol = 1e-11;
  double init_scale = 1.0;  // multiplies the He standard deviations
  // Continuation levels, then a final pass on the exact ReLU. Plain GD on
  // the ReLU stalls wherever an optimal hyperplane passes through a data
  // point, since no one-sided gradient is a descent direction there.
  std::vector<double> smoothing{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
};

namespace detail {

// Armijo GD at one smoothing level; returns the smoothed objective
inline double armijo_descent(const Mat& x, const Vector& e, double beta, TwoLayerNet& net, double tau,
                             const NonconvexOptions& opt) {
  TwoLayerNet g, trial, gt;
  double f = nonconvex_value_and_grad(x, e, beta, net, g, tau);
  double step = 1.0;
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    double g2 = 0.0;
    for (double v : g.w.data()) g2 += v * v;
    for (double v : g.alpha) g2 += v * v;
    if (std::sqrt(g2) < opt.grad_tol) break;
    step = std::min(step * 2.0, 1e3);
    double ft = f;
    for (int bt = 0; bt < 60; ++bt) {
      trial = net;
      for (std::size_t i = 0; i < trial.w.size(); ++i) trial.w.data()[i] -= step * g.w.data()[i];
      for (std::size_t j = 0; j < trial.alpha.size(); ++j) trial.alpha[j] -= step * g.alpha[j];
      ft = nonconvex_value_and_grad(x, e, beta, trial, gt, tau);
      if (ft <= f - 0.5 * step * g2) break;
      step *= 0.5;
    }
    if (!(ft < f)) break;
    std::swap(net, trial);
    std::swap(g, gt);
    f = ft;
  }
  return f;
}

}  // namespace detail

/// Best-of-restarts smoothed-continuation GD from He-initialized weights,
/// scored on the exact objective.
inline NonconvexOracle nonconvex_oracle(const Mat& x, const Vector& e, double beta, std::size_t m,
                                        std::uint64_t seed, const NonconvexOptions& opt = {}) {
  NonconvexOracle out;
  out.width = m;
  out.restarts = opt.restarts;
  const std::size_t d = x.cols();
  for (std::size_t r = 0; r < opt.restarts; ++r) {
    SplitMix64 rng(stream_seed(seed, 0x6E63ULL + r));
    TwoLayerNet net{Mat(m, d), Vector(m)};
    const double sw = opt.init_scale * std::sqrt(2.0 / static_cast<double>(d));
    const double sa = opt.init_scale * std::sqrt(2.0 / static_cast<double>(std::max<std::size_t>(m, 1)));
    for (double& v : net.w.data()) v = sw * rng.normal();
    for (double& a : net.alpha) a = sa * rng.normal();
    for (double tau : opt.smoothing) detail::armijo_descent(x, e, beta, net, tau, opt);
    detail::armijo_descent(x, e, beta, net, 0.0, opt);
    const double f = nonconvex_objective(x, e, beta, net);
    if (f < out.best) {
      out.best = f;
      out.best_net = net;
    }
  }
  return out;
}

/// Oracle width rule: comfortably above m*.
inline std::size_t oracle_width(std::size_t m_star) { return std::max<std::size_t>({2 * m_star, m_star + 4, 1}); }

struct ConvexCheck {
  std::size_t patterns = 0;
  double convex = 0.0;
  double reconstructed = 0.0;
  double nonconvex = 0.0;
  std::size_t m_star = 0;
  std::size_t oracle_width = 0;
  double constraint_residual = 0.0;
  double gap() const { return std::abs(convex - nonconvex); }
  double identity_gap() const { return std::abs(convex - reconstructed); }
};

inline ConvexCheck convex_check(const Mat& x, const Vector& e, double beta, std::uint64_t seed,
                                const NonconvexOptions& nopt = {}) {
  ConvexCheck c;
  auto pats = enumerate_patterns(x, seed);
  c.patterns = pats.size();
  const ConvexSolution sol = solve_convex_program(x, e, beta, std::move(pats));
  c.convex = sol.objective;
  c.constraint_residual = sol.constraint_residual;
  const TwoLayerNet net = reconstruct_network(sol, &c.m_star);
  c.reconstructed = nonconvex_objective(x, e, beta, net);
  c.oracle_width = oracle_width(c.m_star);
  c.nonconvex = nonconvex_oracle(x, e, beta, c.oracle_width, seed, nopt).best;
  return c;
}

}  // namespace mgdl
