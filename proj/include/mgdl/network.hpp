// Fully connected networks N(x) = W_D^T a_{D-1} + b_D with a_j = σ(W_j^T a_{j-1} + b_j).
//
// Conventions used by every module:
//   * W_j is d_{j-1} x d_j and is stored column-major inside the flat
//     parameter vector, i.e. W_j(r, c) lives at offset + r + c * d_{j-1}.
//   * The flat vector is (vec W_1, b_1, vec W_2, b_2, ..., vec W_D, b_D).
//   * Layers are 0-based in code: layer k maps a_k to z_{k+1}.
//   * ReLU'(0) = 1.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "mgdl/numerics.hpp"
#include "mgdl/rng.hpp"

namespace mgdl {

// ---------------------------------------------------------------------------
// Activations

struct Activation {
  enum class Kind { ReLU, Softplus };
  Kind kind = Kind::ReLU;
  double beta = 1.0;  // Softplus sharpness; ignored for ReLU

  static Activation relu() { return {}; }
  static Activation softplus(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("Softplus beta must be > 0");
    return {Kind::Softplus, beta};
  }

  bool is_relu() const { return kind == Kind::ReLU; }

  double value(double p) const {
    if (is_relu()) return p >= 0.0 ? p : 0.0;
    const double t = beta * p;
    // log(1 + e^t) without overflow
    return (t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t))) / beta;
  }
  double deriv(double p) const {
    if (is_relu()) return p >= 0.0 ? 1.0 : 0.0;
    return logistic(beta * p);
  }
  double second(double p) const {
    if (is_relu()) return 0.0;
    const double s = logistic(beta * p);
    return beta * s * (1.0 - s);
  }

  std::string name() const { return is_relu() ? "relu" : "softplus(" + std::to_string(beta) + ")"; }

 private:
  static double logistic(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }
};

// ---------------------------------------------------------------------------
// Architectures

struct Arch {
  std::vector<std::size_t> widths;  // d_0 .. d_D
  Activation activation{};
  std::size_t frozen_depth = 0;  // leading hidden layers that are not trained

  std::size_t depth() const { return widths.empty() ? 0 : widths.size() - 1; }
  std::size_t input_dim() const { return widths.front(); }
  std::size_t output_dim() const { return widths.back(); }

  void validate() const {
    if (widths.size() < 2) throw std::invalid_argument("Arch: need at least input and output widths");
    for (std::size_t w : widths)
      if (w == 0) throw std::invalid_argument("Arch: zero width");
    if (frozen_depth >= depth()) throw std::invalid_argument("Arch: frozen_depth must be < depth");
  }

  bool operator==(const Arch& o) const {
    return widths == o.widths && activation.kind == o.activation.kind && activation.beta == o.activation.beta &&
           frozen_depth == o.frozen_depth;
  }
};

struct LayerShape {
  std::size_t rows = 0;  // d_{j-1}
  std::size_t cols = 0;  // d_j
  std::size_t count() const { return (rows + 1) * cols; }
  bool operator==(const LayerShape&) const = default;
};

/// Flat parameters plus the per-layer shapes needed to index them.
class ParamVec {
 public:
  ParamVec() = default;
  explicit ParamVec(std::vector<LayerShape> layout) : layout_(std::move(layout)) {
    index();
    data_.assign(total_, 0.0);
  }
  ParamVec(std::vector<LayerShape> layout, Vector data) : layout_(std::move(layout)), data_(std::move(data)) {
    index();
    if (data_.size() != total_) throw std::invalid_argument("ParamVec: data length does not match layout");
  }
  static ParamVec zeros(const Arch& arch) { return ParamVec(layout_of(arch)); }

  static std::vector<LayerShape> layout_of(const Arch& arch) {
    arch.validate();
    std::vector<LayerShape> l;
    for (std::size_t k = 0; k + 1 < arch.widths.size(); ++k) l.push_back({arch.widths[k], arch.widths[k + 1]});
    return l;
  }

  const std::vector<LayerShape>& layout() const { return layout_; }
  std::size_t layers() const { return layout_.size(); }
  std::size_t size() const { return data_.size(); }
  Vector& data() { return data_; }
  const Vector& data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::size_t weight_offset(std::size_t k) const { return offsets_.at(k); }
  std::size_t bias_offset(std::size_t k) const { return offsets_.at(k) + layout_[k].rows * layout_[k].cols; }
  std::size_t layer_end(std::size_t k) const { return offsets_.at(k) + layout_[k].count(); }

  /// W_{k+1}(r, c) in 0-based layer indexing.
  double& w(std::size_t k, std::size_t r, std::size_t c) { return data_[weight_offset(k) + r + c * layout_[k].rows]; }
  double w(std::size_t k, std::size_t r, std::size_t c) const {
    return data_[weight_offset(k) + r + c * layout_[k].rows];
  }
  double& b(std::size_t k, std::size_t c) { return data_[bias_offset(k) + c]; }
  double b(std::size_t k, std::size_t c) const { return data_[bias_offset(k) + c]; }

  /// Weight matrix of layer k as a row-major Mat (d_{k} x d_{k+1}).
  Mat weight(std::size_t k) const {
    Mat m(layout_[k].rows, layout_[k].cols);
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = w(k, r, c);
    return m;
  }
  Vector bias(std::size_t k) const {
    return Vector(data_.begin() + static_cast<std::ptrdiff_t>(bias_offset(k)),
                  data_.begin() + static_cast<std::ptrdiff_t>(layer_end(k)));
  }
  void set_weight(std::size_t k, const Mat& m) {
    if (m.rows() != layout_[k].rows || m.cols() != layout_[k].cols)
      throw std::invalid_argument("ParamVec::set_weight: shape mismatch");
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) w(k, r, c) = m(r, c);
  }
  void set_bias(std::size_t k, std::span<const double> v) {
    if (v.size() != layout_[k].cols) throw std::invalid_argument("ParamVec::set_bias: length mismatch");
    std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(bias_offset(k)));
  }

  bool operator==(const ParamVec& o) const { return layout_ == o.layout_ && data_ == o.data_; }

 private:
  void index() {
    offsets_.clear();
    total_ = 0;
    for (const auto& s : layout_) {
      offsets_.push_back(total_);
      total_ += s.count();
    }
  }

  std::vector<LayerShape> layout_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
  Vector data_;
};

inline std::size_t param_count(const Arch& arch) {
  std::size_t m = 0;
  for (const auto& s : ParamVec::layout_of(arch)) m += s.count();
  return m;
}

/// He-normal weights, zero biases. Each layer draws from its own stream so
/// widening one layer does not reshuffle the others.
inline ParamVec init_params(const Arch& arch, std::uint64_t seed) {
  ParamVec p = ParamVec::zeros(arch);
  for (std::size_t k = 0; k < p.layers(); ++k) {
    SplitMix64 rng(stream_seed(seed, k));
    const double sd = std::sqrt(2.0 / static_cast<double>(p.layout()[k].rows));
    const std::size_t off = p.weight_offset(k);
    for (std::size_t i = 0; i < p.layout()[k].rows * p.layout()[k].cols; ++i) p[off + i] = sd * rng.normal();
  }
  return p;
}

inline void require_arch_params(const Arch& arch, const ParamVec& p) {
  if (p.layout() != ParamVec::layout_of(arch)) throw std::invalid_argument("parameters do not match architecture");
}

// ---------------------------------------------------------------------------
// Evaluation

/// Pre-activations and activations for a batch, feature-major: row r of a
/// matrix holds unit r for every sample, so inner loops run over samples.
struct ForwardBatch {
  std::size_t samples = 0;
  std::vector<Mat> act;  // act[0] = inputs (d_0 x n), act[k] = σ(pre[k-1]) for hidden k, act[D] = output
  std::vector<Mat> pre;  // pre[k] = z_{k+1} (d_{k+1} x n)

  const Mat& output() const { return act.back(); }
};

/// Affine map for one layer: out(c, :) = b_c + Σ_r W(r, c) in(r, :).
inline void affine_layer(const ParamVec& p, std::size_t k, const Mat& in, Mat& out) {
  const auto [rows, cols] = p.layout()[k];
  const std::size_t n = in.cols();
  out.resize(cols, n);
  for (std::size_t c = 0; c < cols; ++c) std::fill(out.row(c), out.row(c) + n, p.b(k, c));
  // column-major W_k (rows x cols) is row-major W_kᵀ
  gemm(false, false, cols, n, rows, 1.0, p.data().data() + p.weight_offset(k), rows, in.data().data(), n, 1.0,
       out.data().data(), n);
}

/// Forward pass into `fb`, reusing its buffers. fb.act[0] must already hold
/// the feature-major inputs (d_0 x n).
inline void forward_batch_inplace(const Arch& arch, const ParamVec& p, ForwardBatch& fb) {
  require_arch_params(arch, p);
  const Mat& in = fb.act.at(0);
  if (in.rows() != arch.input_dim()) throw std::invalid_argument("forward: input width mismatch");
  fb.samples = in.cols();
  const std::size_t depth = arch.depth();
  fb.act.resize(depth + 1);
  fb.pre.resize(depth);
  for (std::size_t k = 0; k < depth; ++k) {
    affine_layer(p, k, fb.act[k], fb.pre[k]);
    const Mat& z = fb.pre[k];
    Mat& a = fb.act[k + 1];
    a.resize(z.rows(), z.cols());
    if (k + 1 == depth) {
      std::copy(z.data().begin(), z.data().end(), a.data().begin());
      continue;
    }
    const Activation& s = arch.activation;
    if (s.is_relu()) {
      for (std::size_t i = 0; i < z.size(); ++i) a.data()[i] = z.data()[i] >= 0.0 ? z.data()[i] : 0.0;
    } else {
      for (std::size_t i = 0; i < z.size(); ++i) a.data()[i] = s.value(z.data()[i]);
    }
  }
}

/// Batched forward pass. `inputs_fm` is feature-major (d_0 x n).
inline ForwardBatch forward_batch(const Arch& arch, const ParamVec& p, Mat inputs_fm) {
  ForwardBatch fb;
  fb.act.push_back(std::move(inputs_fm));
  forward_batch_inplace(arch, p, fb);
  return fb;
}

inline Vector forward(const Arch& arch, const ParamVec& p, std::span<const double> x) {
  if (x.size() != arch.input_dim()) throw std::invalid_argument("forward: input length mismatch");
  Mat in(x.size(), 1, Vector(x.begin(), x.end()));
  const ForwardBatch fb = forward_batch(arch, p, std::move(in));
  return fb.output().data();
}

/// a_j = H_j(x) for 1 <= j <= D-1.
inline Vector hidden_features(const Arch& arch, const ParamVec& p, std::span<const double> x, std::size_t j) {
  if (j < 1 || j + 1 > arch.depth()) throw std::out_of_range("hidden_features: layer index out of range");
  Mat in(x.size(), 1, Vector(x.begin(), x.end()));
  const ForwardBatch fb = forward_batch(arch, p, std::move(in));
  return fb.act[j].data();
}

/// Batched a_j for all rows of `inputs` (samples x d_0); returns samples x d_j.
/// j = 0 returns the inputs unchanged.
inline Mat hidden_features_batch(const Arch& arch, const ParamVec& p, const Mat& inputs, std::size_t j) {
  if (j + 1 > arch.depth()) throw std::out_of_range("hidden_features: layer index out of range");
  if (j == 0) return inputs;
  require_arch_params(arch, p);
  Mat a = inputs.transpose();
  Mat z;
  for (std::size_t k = 0; k < j; ++k) {
    affine_layer(p, k, a, z);
    for (double& v : z.data()) v = arch.activation.value(v);
    a = std::move(z);
  }
  return a.transpose();
}

// ---------------------------------------------------------------------------
// Frozen prefixes

/// The trainable tail of a grade architecture, seen as a standalone net whose
/// inputs are the frozen features a_{frozen_depth}.
inline Arch trainable_suffix(const Arch& arch) {
  arch.validate();
  Arch s;
  s.widths.assign(arch.widths.begin() + static_cast<std::ptrdiff_t>(arch.frozen_depth), arch.widths.end());
  s.activation = arch.activation;
  return s;
}

inline std::size_t suffix_offset(const ParamVec& p, std::size_t frozen_depth) {
  return frozen_depth == 0 ? 0 : p.layer_end(frozen_depth - 1);
}

inline ParamVec suffix_params(const Arch& arch, const ParamVec& p) {
  require_arch_params(arch, p);
  const std::size_t off = suffix_offset(p, arch.frozen_depth);
  return ParamVec(ParamVec::layout_of(trainable_suffix(arch)),
                  Vector(p.data().begin() + static_cast<std::ptrdiff_t>(off), p.data().end()));
}

inline void assign_suffix(const Arch& arch, ParamVec& p, const ParamVec& suffix) {
  const std::size_t off = suffix_offset(p, arch.frozen_depth);
  if (off + suffix.size() != p.size()) throw std::invalid_argument("assign_suffix: size mismatch");
  std::copy(suffix.data().begin(), suffix.data().end(), p.data().begin() + static_cast<std::ptrdiff_t>(off));
}

// ---------------------------------------------------------------------------
// Multi-scale networks

struct MsdlArch {
  std::vector<Arch> subnets;
  std::vector<double> scales;

  void validate() const {
    if (subnets.empty()) throw std::invalid_argument("MsdlArch: no subnets");
    if (scales.size() != subnets.size()) throw std::invalid_argument("MsdlArch: scales/subnets length mismatch");
    for (double a : scales)
      if (!(a > 0.0)) throw std::invalid_argument("MsdlArch: scales must be positive");
    for (const auto& s : subnets) {
      s.validate();
      if (s.input_dim() != subnets.front().input_dim() || s.output_dim() != subnets.front().output_dim())
        throw std::invalid_argument("MsdlArch: subnets disagree on input/output width");
    }
  }
};

inline Vector msdl_forward(const MsdlArch& m, const std::vector<ParamVec>& params, std::span<const double> x) {
  m.validate();
  if (params.size() != m.subnets.size()) throw std::invalid_argument("msdl_forward: params count != subnet count");
  Vector out(m.subnets.front().output_dim(), 0.0);
  for (std::size_t s = 0; s < m.subnets.size(); ++s) {
    Vector xs(x.begin(), x.end());
    for (double& v : xs) v *= m.scales[s];
    const Vector o = forward(m.subnets[s], params[s], xs);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += o[i];
  }
  return out;
}

/// Concatenation of subnet parameter vectors, in subnet order.
inline Vector concat_params(const std::vector<ParamVec>& params) {
  Vector v;
  for (const auto& p : params) v.insert(v.end(), p.data().begin(), p.data().end());
  return v;
}

inline std::vector<ParamVec> split_params(const MsdlArch& m, std::span<const double> flat) {
  std::vector<ParamVec> out;
  std::size_t off = 0;
  for (const auto& a : m.subnets) {
    const std::size_t n = param_count(a);
    if (off + n > flat.size()) throw std::invalid_argument("split_params: vector too short");
    out.emplace_back(ParamVec::layout_of(a), Vector(flat.begin() + off, flat.begin() + off + n));
    off += n;
  }
  if (off != flat.size()) throw std::invalid_argument("split_params: vector too long");
  return out;
}

inline std::vector<ParamVec> init_msdl_params(const MsdlArch& m, std::uint64_t seed) {
  std::vector<ParamVec> out;
  for (std::size_t s = 0; s < m.subnets.size(); ++s) out.push_back(init_params(m.subnets[s], stream_seed(seed, 1000 + s)));
  return out;
}

// ---------------------------------------------------------------------------
// Presets

using Preset = std::variant<Arch, MsdlArch>;

inline Arch make_arch(std::size_t d0, std::size_t width, std::size_t hidden, std::size_t frozen = 0) {
  Arch a;
  a.widths.push_back(d0);
  for (std::size_t i = 0; i < hidden; ++i) a.widths.push_back(width);
  a.widths.push_back(1);
  a.frozen_depth = frozen;
  return a;
}

/// Named architectures. For MGDL-* the grade (1-based) selects the grade net,
/// frozen prefix included.
inline Preset preset(const std::string& name, std::size_t grade = 1) {
  struct Family {
    const char* sgdl;
    const char* mgdl;
    std::size_t d0, width, sgdl_hidden, per_grade;
  };
  static const std::array<Family, 4> kFamilies{{
      {"SGDL-1", "MGDL-1", 1, 32, 4, 1},
      {"SGDL-2", "MGDL-2", 2, 128, 8, 2},
      {"SGDL-3", "MGDL-3", 2, 128, 12, 3},
      {"SGDL-4", "MGDL-4", 2, 48, 4, 1},
  }};
  for (const auto& f : kFamilies) {
    if (name == f.sgdl) return make_arch(f.d0, f.width, f.sgdl_hidden);
    if (name == f.mgdl) {
      if (grade < 1) throw std::invalid_argument("preset: grade must be >= 1");
      const std::size_t frozen = f.per_grade * (grade - 1);
      return make_arch(f.d0, f.width, frozen + f.per_grade, frozen);
    }
  }
  if (name == "MSDL") {
    MsdlArch m;
    for (double s : {1.0, 2.0, 4.0, 8.0}) {
      m.subnets.push_back(make_arch(1, 8, 4));
      m.scales.push_back(s);
    }
    return m;
  }
  throw std::invalid_argument("preset: unknown name '" + name + "'");
}

inline Arch preset_arch(const std::string& name, std::size_t grade = 1) {
  Preset p = preset(name, grade);
  if (auto* a = std::get_if<Arch>(&p)) return *a;
  throw std::invalid_argument("preset '" + name + "' is not a single network");
}

/// Hidden layers each MGDL grade adds for a family name ("MGDL-2" -> 2).
inline std::size_t mgdl_layers_per_grade(const std::string& name) {
  const Arch g1 = preset_arch(name, 1);
  return g1.depth() - 1;
}

// ---------------------------------------------------------------------------
// Serialization: u32 layer count, then u32 (rows, cols) per layer, then the
// flat data as little-endian IEEE-754 doubles.

namespace detail {
template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  os.write(reinterpret_cast<const char*>(b.data()), sizeof(T));
}
template <class T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> b;
  if (!is.read(reinterpret_cast<char*>(b.data()), sizeof(T))) throw IoError("read_params: truncated input");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}
}  // namespace detail

inline void write_params(std::ostream& os, const ParamVec& p) {
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.layers()));
  for (const auto& s : p.layout()) {
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.rows));
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.cols));
  }
  for (double v : p.data()) detail::put_le<double>(os, v);
}

inline ParamVec read_params(std::istream& is) {
  const auto n = detail::get_le<std::uint32_t>(is);
  if (n == 0 || n > 4096) throw IoError("read_params: implausible layer count");
  std::vector<LayerShape> layout;
  for (std::uint32_t k = 0; k < n; ++k) {
    const auto r = detail::get_le<std::uint32_t>(is);
    const auto c = detail::get_le<std::uint32_t>(is);
    layout.push_back({r, c});
  }
  ParamVec p(std::move(layout));
  for (double& v : p.data()) v = detail::get_le<double>(is);
  return p;
}

inline void write_params(const std::string& path, const ParamVec& p) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_params(os, p);
  if (!os) throw IoError("write failed for '" + path + "'");
}

inline ParamVec read_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_params(is);
}

}  // namespace mgdl
