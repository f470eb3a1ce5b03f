// Sum-of-sinusoids regression target on [0, 1]:
//   g(x) = Σ_j sin(2π κ_j x + φ_j),  φ_j ~ U(0, 2π) from a seed.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "mgdl/calculus.hpp"
#include "mgdl/rng.hpp"

namespace mgdl {

struct SineTarget {
  std::vector<double> kappa;
  std::vector<double> phi;

  double operator()(double x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < kappa.size(); ++j) s += std::sin(2.0 * M_PI * kappa[j] * x + phi[j]);
    return s;
  }
};

/// Phases drawn from `seed` unless given explicitly.
inline SineTarget make_sine_target(std::vector<double> kappa, std::uint64_t seed,
                                   std::optional<std::vector<double>> phases = std::nullopt) {
  SineTarget t{std::move(kappa), {}};
  if (phases) {
    if (phases->size() != t.kappa.size()) throw std::invalid_argument("sine target: one phase per frequency");
    t.phi = *phases;
  } else {
    SplitMix64 rng(stream_seed(seed, 0x706869ULL));
    for (std::size_t j = 0; j < t.kappa.size(); ++j) t.phi.push_back(rng.uniform(0.0, 2.0 * M_PI));
  }
  return t;
}

inline Dataset sample_target(const SineTarget& g, const std::vector<double>& xs) {
  Dataset d{Mat(xs.size(), 1), Mat(xs.size(), 1)};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d.inputs(i, 0) = xs[i];
    d.targets(i, 0) = g(xs[i]);
  }
  return d;
}

/// n equally spaced points on [0, 1], endpoints included.
inline Dataset equispaced_set(const SineTarget& g, std::size_t n) {
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i) xs[i] = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
  return sample_target(g, xs);
}

/// n i.i.d. uniform points on [0, 1].
inline Dataset uniform_set(const SineTarget& g, std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(stream_seed(seed, 0x76616cULL));
  std::vector<double> xs(n);
  for (double& x : xs) x = rng.uniform();
  return sample_target(g, xs);
}

}  // namespace mgdl
