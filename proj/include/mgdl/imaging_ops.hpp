// Image plumbing: coordinate grids, degradations, the first-order difference
// operator, soft thresholding, PSNR, PGM I/O and a synthetic phantom.
//
// An n x n image is a row-major Mat; pixel (s, t) has flat index s * n + t.
#pragma once

#include <algorithm>
#include <cctype>
#include <cfenv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mgdl/numerics.hpp"
#include "mgdl/rng.hpp"

namespace mgdl {

/// Pixel centres in [0,1]²: pixel (s, t) -> ((s + 0.5)/n, (t + 0.5)/n), 0-based.
inline Mat coord_grid(std::size_t n) {
  if (n == 0) throw std::invalid_argument("coord_grid: n must be >= 1");
  Mat g(n * n, 2);
  const double dn = static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      g(s * n + t, 0) = (static_cast<double>(s) + 0.5) / dn;
      g(s * n + t, 1) = (static_cast<double>(t) + 0.5) / dn;
    }
  return g;
}

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Training pixels on the stride-2 lattice from the origin; the test set is every pixel.
inline Split quarter_train_split(std::size_t n) {
  Split sp;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      if (s % 2 == 0 && t % 2 == 0) sp.train.push_back(s * n + t);
      sp.test.push_back(s * n + t);
    }
  return sp;
}

inline Mat select_rows(const Mat& m, const std::vector<std::size_t>& idx) {
  Mat out(idx.size(), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) std::copy(m.row(idx[i]), m.row(idx[i]) + m.cols(), out.row(i));
  return out;
}

/// i.i.d. N(0, σ²) per pixel, no clamping.
inline Mat add_gaussian_noise(const Mat& img, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("add_gaussian_noise: sigma must be >= 0");
  Mat out = img;
  if (sigma == 0.0) return out;
  SplitMix64 rng(stream_seed(seed, 0x6E6F697365ULL));
  for (double& v : out.data()) v += sigma * rng.normal();
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur: separable, radius ceil(3σ̂), renormalized, replicate boundary.

inline std::vector<double> gaussian_kernel(double sigma_hat) {
  if (sigma_hat < 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be >= 0");
  if (sigma_hat == 0.0) return {1.0};
  const auto radius = static_cast<int>(std::ceil(3.0 * sigma_hat));
  std::vector<double> k(2 * static_cast<std::size_t>(radius) + 1);
  double sum = 0.0;
  for (int q = -radius; q <= radius; ++q) {
    const double v = std::exp(-0.5 * (q * q) / (sigma_hat * sigma_hat));
    k[static_cast<std::size_t>(q + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace detail {
inline std::size_t clamp_index(long i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

/// One separable pass. `along_rows` convolves within each row (over t).
inline Mat blur_pass(const Mat& v, const std::vector<double>& k, bool along_rows, bool adjoint) {
  const std::size_t n = v.rows();
  const long radius = static_cast<long>(k.size() / 2);
  Mat out(n, v.cols());
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < v.cols(); ++t)
      for (long q = -radius; q <= radius; ++q) {
        const double w = k[static_cast<std::size_t>(q + radius)];
        if (along_rows) {
          const std::size_t tt = clamp_index(static_cast<long>(t) + q, v.cols());
          if (adjoint)
            out(s, tt) += w * v(s, t);
          else
            out(s, t) += w * v(s, tt);
        } else {
          const std::size_t ss = clamp_index(static_cast<long>(s) + q, n);
          if (adjoint)
            out(ss, t) += w * v(s, t);
          else
            out(s, t) += w * v(ss, t);
        }
      }
  return out;
}
}  // namespace detail

inline Mat gaussian_blur_apply(const Mat& img, double sigma_hat) {
  if (sigma_hat == 0.0) return img;
  const auto k = gaussian_kernel(sigma_hat);
  return detail::blur_pass(detail::blur_pass(img, k, true, false), k, false, false);
}

/// Kᵀ v. Replicate padding makes K non-symmetric near the border.
inline Mat gaussian_blur_adjoint(const Mat& img, double sigma_hat) {
  if (sigma_hat == 0.0) return img;
  const auto k = gaussian_kernel(sigma_hat);
  return detail::blur_pass(detail::blur_pass(img, k, false, true), k, true, true);
}

// ---------------------------------------------------------------------------
// Difference operator B: n x n -> 2n x n. Rows 0..n-1 hold horizontal
// differences v(s,t) - v(s,t-1), rows n..2n-1 vertical v(s,t) - v(s-1,t);
// entries on the first column / first row are zero.

inline Mat diff_operator_apply(const Mat& v) {
  const std::size_t n = v.rows();
  if (v.cols() != n) throw std::invalid_argument("diff_operator_apply: image must be square");
  Mat d(2 * n, n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) d(s, t) = v(s, t) - v(s, t - 1);
      if (s > 0) d(n + s, t) = v(s, t) - v(s - 1, t);
    }
  return d;
}

inline Mat diff_operator_adjoint(const Mat& d) {
  const std::size_t n = d.cols();
  if (d.rows() != 2 * n) throw std::invalid_argument("diff_operator_adjoint: expected 2n x n input");
  Mat v(n, n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) {
        v(s, t) += d(s, t);
        v(s, t - 1) -= d(s, t);
      }
      if (s > 0) {
        v(s, t) += d(n + s, t);
        v(s - 1, t) -= d(n + s, t);
      }
    }
  return v;
}

inline double soft_threshold(double x, double kappa) {
  const double a = std::abs(x) - kappa;
  return a > 0.0 ? std::copysign(a, x) : 0.0;
}

inline Mat soft_threshold(const Mat& x, double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("soft_threshold: kappa must be >= 0");
  Mat out = x;
  for (double& v : out.data()) v = soft_threshold(v, kappa);
  return out;
}

inline double l11_norm(const Mat& m) {
  double s = 0.0;
  for (double v : m.data()) s += std::abs(v);
  return s;
}

// ---------------------------------------------------------------------------
// Quality

/// 10 log10(n_pixels 255² / ‖v − v̂‖²); +inf for identical images.
inline double psnr(const Mat& truth, const Mat& recon) {
  if (truth.rows() != recon.rows() || truth.cols() != recon.cols())
    throw std::invalid_argument("psnr: shape mismatch");
  double err = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth.data()[i] - recon.data()[i];
    err += d * d;
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(static_cast<double>(truth.size()) * 255.0 * 255.0 / err);
}

inline Mat clamp_image(Mat img) {
  for (double& v : img.data()) v = std::clamp(v, 0.0, 255.0);
  return img;
}

// ---------------------------------------------------------------------------
// PGM (8-bit, maxval 255)

inline std::uint8_t quantize(double v) {
  const int old = std::fegetround();
  std::fesetround(FE_TONEAREST);  // ties to even
  const double r = std::nearbyint(std::clamp(v, 0.0, 255.0));
  std::fesetround(old);
  return static_cast<std::uint8_t>(r);
}

inline void write_pgm(const std::string& path, const Mat& img, bool binary = true) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << (binary ? "P5" : "P2") << '\n' << img.cols() << ' ' << img.rows() << "\n255\n";
  if (binary) {
    for (double v : img.data()) os.put(static_cast<char>(quantize(v)));
  } else {
    for (std::size_t s = 0; s < img.rows(); ++s) {
      for (std::size_t t = 0; t < img.cols(); ++t) os << (t ? " " : "") << static_cast<int>(quantize(img(s, t)));
      os << '\n';
    }
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

inline Mat read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  auto token = [&is, &path]() {
    std::string tok;
    char c;
    while (is.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(is, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(c);
    }
    if (tok.empty()) throw IoError("truncated PGM header in '" + path + "'");
    return tok;
  };
  const std::string magic = token();
  if (magic != "P2" && magic != "P5") throw IoError("'" + path + "' is not a P2/P5 PGM");
  const std::size_t w = std::stoul(token());
  const std::size_t h = std::stoul(token());
  const long maxval = std::stol(token());
  if (maxval <= 0 || maxval > 255) throw IoError("'" + path + "': only 8-bit PGM is supported");
  Mat img(h, w);
  for (std::size_t i = 0; i < w * h; ++i) {
    if (magic == "P5") {
      char c;
      if (!is.get(c)) throw IoError("truncated PGM data in '" + path + "'");
      img.data()[i] = static_cast<unsigned char>(c);
    } else {
      img.data()[i] = std::stod(token());
    }
    img.data()[i] *= 255.0 / static_cast<double>(maxval);
  }
  return img;
}

// ---------------------------------------------------------------------------
// Synthetic phantom: a smooth ramp, a coarse low-contrast checkerboard and two
// disks, all on a [0, 255] scale.

struct PhantomSpec {
  std::size_t n = 32;
  std::size_t checker_cells = 4;
  double checker_amplitude = 12.0;
};

inline Mat phantom(const PhantomSpec& spec = {}) {
  const std::size_t n = spec.n;
  if (n == 0) throw std::invalid_argument("phantom: n must be >= 1");
  Mat img(n, n);
  const double dn = static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t t = 0; t < n; ++t) {
      const double x = (static_cast<double>(s) + 0.5) / dn;
      const double y = (static_cast<double>(t) + 0.5) / dn;
      double v = 50.0 + 90.0 * x + 50.0 * y;
      const std::size_t cs = static_cast<std::size_t>(x * static_cast<double>(spec.checker_cells));
      const std::size_t ct = static_cast<std::size_t>(y * static_cast<double>(spec.checker_cells));
      v += ((cs + ct) % 2 == 0 ? 1.0 : -1.0) * spec.checker_amplitude;
      if ((x - 0.35) * (x - 0.35) + (y - 0.4) * (y - 0.4) < 0.18 * 0.18) v += 60.0;
      if ((x - 0.72) * (x - 0.72) + (y - 0.7) * (y - 0.7) < 0.12 * 0.12) v -= 45.0;
      img(s, t) = std::clamp(v, 0.0, 255.0);
    }
  return img;
}

}  // namespace mgdl
