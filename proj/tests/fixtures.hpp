// Shared random fixtures for the unit and acceptance tests.
#pragma once

#include <optional>

#include "mgdl/calculus_tv.hpp"
#include "mgdl/rng.hpp"

namespace fx {

using namespace mgdl;

inline Dataset random_dataset(std::size_t n, std::size_t d, SplitMix64& rng) {
  Dataset ds{Mat(n, d), Mat(n, 1)};
  for (double& v : ds.inputs.data()) v = 2.0 * rng.uniform() - 1.0;
  for (double& v : ds.targets.data()) v = rng.normal();
  return ds;
}

/// Small random nonzero biases so that kinks are not pinned to the origin.
inline ParamVec random_params(const Arch& a, SplitMix64& rng) {
  ParamVec p = init_params(a, rng.next());
  for (std::size_t k = 0; k < p.layers(); ++k)
    for (std::size_t c = 0; c < p.layout()[k].cols; ++c) p.b(k, c) = 0.3 * rng.normal();
  return p;
}

struct Triple {
  Arch arch;
  ParamVec params;
  Dataset data;
};

/// Redraws until every hidden pre-activation has magnitude > margin.
inline Triple kink_free(const Arch& a, std::size_t n, double margin, SplitMix64& rng) {
  for (int tries = 0; tries < 100000; ++tries) {
    Triple t{a, random_params(a, rng), random_dataset(n, a.input_dim(), rng)};
    if (min_abs_preactivation(t.arch, t.params, t.data.inputs) > margin) return t;
  }
  throw std::runtime_error("kink_free: no admissible draw");
}

struct MsdlTriple {
  MsdlArch arch;
  Vector params;
  Dataset data;
};

inline MsdlTriple kink_free_msdl(std::size_t subnets, std::size_t width, std::size_t n, double margin,
                                 SplitMix64& rng) {
  MsdlArch m;
  for (std::size_t s = 0; s < subnets; ++s) {
    m.subnets.push_back(make_arch(1, width, 1));
    m.scales.push_back(static_cast<double>(1u << s));
  }
  for (int tries = 0; tries < 100000; ++tries) {
    std::vector<ParamVec> ps;
    for (const auto& a : m.subnets) ps.push_back(random_params(a, rng));
    Dataset d = random_dataset(n, 1, rng);
    bool ok = true;
    for (std::size_t s = 0; s < subnets && ok; ++s) {
      Mat x = d.inputs;
      x *= m.scales[s];
      ok = min_abs_preactivation(m.subnets[s], ps[s], x) > margin;
    }
    if (ok) return {m, concat_params(ps), std::move(d)};
  }
  throw std::runtime_error("kink_free_msdl: no admissible draw");
}

struct TvTriple {
  Arch arch;
  ParamVec params;
  Mat u;
  ImageProblem problem;
};

/// Denoising problem on an n x n grid with random observed image and u.
inline TvTriple kink_free_tv(std::size_t hidden, std::size_t width, std::size_t n, double margin, SplitMix64& rng) {
  const Arch a = make_arch(2, width, hidden);
  ImageProblem pb;
  pb.n = n;
  pb.inputs = coord_grid(n);
  pb.lambda = 0.1;
  pb.beta = 0.5 + rng.uniform();
  for (int tries = 0; tries < 100000; ++tries) {
    ParamVec p = random_params(a, rng);
    if (min_abs_preactivation(a, p, pb.inputs) <= margin) continue;
    pb.observed = Mat(n, n);
    for (double& v : pb.observed.data()) v = rng.normal();
    Mat u(2 * n, n);
    for (double& v : u.data()) v = 0.5 * rng.normal();
    return {a, std::move(p), std::move(u), pb};
  }
  throw std::runtime_error("kink_free_tv: no admissible draw");
}

}  // namespace fx
