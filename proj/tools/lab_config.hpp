// Experiment configuration: a flat `key = value` file (# comments), overlaid
// by command-line flags. Every key maps to exactly one field below.
#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mgdl/imaging_ops.hpp"

namespace lab {

struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string k, const std::string& msg) : std::runtime_error("config key '" + k + "': " + msg), key(std::move(k)) {}
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string command;

  // model
  std::string preset = "SGDL-1";
  std::vector<std::size_t> widths;  // explicit architecture; overrides preset when set
  std::string activation = "relu";
  std::size_t grades = 4;
  std::vector<double> epsilons;

  // optimization
  double eta = 0.01;
  std::vector<double> etas;  // sweep grid; empty -> 10 log-spaced points on [eta_min, eta_max]
  double eta_min = 0.001;
  double eta_max = 0.5;
  std::size_t eta_count = 10;
  std::size_t epochs = 10000;  // MGDL: per grade
  std::string optimizer = "gd";
  std::size_t checkpoint_every = 0;
  std::uint64_t seed = 1;

  // synthetic target
  std::vector<double> kappa{1.0, 5.0, 10.0};
  std::vector<double> phases;  // empty -> drawn from seed
  std::size_t train_points = 1024;
  std::size_t val_points = 1000;

  // images
  std::string image;  // PGM path; empty -> synthetic phantom
  std::size_t size = 32;
  double noise_sigma = 0.0;
  double blur_sigma = 0.0;
  double lambda = 0.1;
  double beta = 1.0;
  double alpha_relax = 1.0;
  std::size_t inner_epochs = 1;
  std::size_t outer = 2000;

  // spectrum
  std::size_t spectrum_k = 10;

  // convex check
  std::size_t convex_points = 4;
  std::size_t convex_dim = 2;
  double convex_beta = 0.1;
  std::size_t restarts = 50;
  std::string convex_data;  // CSV rows x_1..x_d,e; empty -> random instance
  bool zero_targets = false;

  std::string out = ".";

  void set(const std::string& key, const std::string& value);
  void validate() const;
  std::vector<std::pair<std::string, std::string>> echo() const;
};

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double to_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size()) throw ConfigError(key, "expected a number, got '" + v + "'");
  return x;
}

inline std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  const auto t = trim(v);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  const auto t = trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key, "expected true/false, got '" + v + "'");
}

/// "1, 8.25, 15.5" or "[1, 8.25, 15.5]"
inline std::vector<double> to_reals(const std::string& key, std::string v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError(key, "unbalanced brackets");
    v = v.substr(1, v.size() - 2);
  }
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!trim(item).empty()) out.push_back(to_real(key, item));
  return out;
}

inline std::string join(const std::vector<double>& v) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}
}  // namespace detail

inline void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string v = trim(raw);
  if (key == "preset") preset = v;
  else if (key == "widths") {
    widths.clear();
    for (double w : to_reals(key, v)) {
      if (w < 1 || w != static_cast<double>(static_cast<std::size_t>(w))) throw ConfigError(key, "widths must be positive integers");
      widths.push_back(static_cast<std::size_t>(w));
    }
  } else if (key == "activation") activation = v;
  else if (key == "grades") grades = to_uint(key, v);
  else if (key == "epsilons") epsilons = to_reals(key, v);
  else if (key == "eta") eta = to_real(key, v);
  else if (key == "etas") etas = to_reals(key, v);
  else if (key == "eta_min") eta_min = to_real(key, v);
  else if (key == "eta_max") eta_max = to_real(key, v);
  else if (key == "eta_count") eta_count = to_uint(key, v);
  else if (key == "epochs") epochs = to_uint(key, v);
  else if (key == "optimizer") optimizer = v;
  else if (key == "checkpoint_every") checkpoint_every = to_uint(key, v);
  else if (key == "seed") seed = to_uint(key, v);
  else if (key == "kappa") kappa = to_reals(key, v);
  else if (key == "phases") phases = to_reals(key, v);
  else if (key == "train_points") train_points = to_uint(key, v);
  else if (key == "val_points") val_points = to_uint(key, v);
  else if (key == "image") image = v;
  else if (key == "size") size = to_uint(key, v);
  else if (key == "noise_sigma") noise_sigma = to_real(key, v);
  else if (key == "blur_sigma") blur_sigma = to_real(key, v);
  else if (key == "lambda") lambda = to_real(key, v);
  else if (key == "beta") beta = to_real(key, v);
  else if (key == "alpha_relax") alpha_relax = to_real(key, v);
  else if (key == "inner_epochs") inner_epochs = to_uint(key, v);
  else if (key == "outer") outer = to_uint(key, v);
  else if (key == "spectrum_k") spectrum_k = to_uint(key, v);
  else if (key == "convex_points") convex_points = to_uint(key, v);
  else if (key == "convex_dim") convex_dim = to_uint(key, v);
  else if (key == "convex_beta") convex_beta = to_real(key, v);
  else if (key == "restarts") restarts = to_uint(key, v);
  else if (key == "convex_data") convex_data = v;
  else if (key == "zero_targets") zero_targets = to_bool(key, v);
  else if (key == "out") out = v;
  else throw ConfigError(key, "unknown key");
}

inline void ExperimentConfig::validate() const {
  auto positive = [](const char* k, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(k, "must be > 0");
  };
  auto nonneg = [](const char* k, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(k, "must be >= 0");
  };
  positive("eta", eta);
  for (double e : etas) positive("etas", e);
  positive("eta_min", eta_min);
  positive("eta_max", eta_max);
  if (eta_max < eta_min) throw ConfigError("eta_max", "must be >= eta_min");
  if (eta_count < 1) throw ConfigError("eta_count", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (grades < 1) throw ConfigError("grades", "must be >= 1");
  for (double e : epsilons) positive("epsilons", e);
  if (optimizer != "gd" && optimizer != "adam") throw ConfigError("optimizer", "expected gd or adam");
  if (activation != "relu" && activation.rfind("softplus", 0) != 0)
    throw ConfigError("activation", "expected relu or softplus[:beta]");
  if (!widths.empty() && widths.size() < 2) throw ConfigError("widths", "need at least input and output widths");
  if (!phases.empty() && phases.size() != kappa.size()) throw ConfigError("phases", "need one phase per kappa");
  if (train_points < 1) throw ConfigError("train_points", "must be >= 1");
  if (val_points < 1) throw ConfigError("val_points", "must be >= 1");
  if (size < 1) throw ConfigError("size", "must be >= 1");
  nonneg("noise_sigma", noise_sigma);
  nonneg("blur_sigma", blur_sigma);
  positive("lambda", lambda);
  positive("beta", beta);
  if (!(alpha_relax > 0.0 && alpha_relax <= 1.0)) throw ConfigError("alpha_relax", "must be in (0, 1]");
  if (inner_epochs < 1) throw ConfigError("inner_epochs", "must be >= 1");
  if (outer < 1) throw ConfigError("outer", "must be >= 1");
  if (spectrum_k < 1) throw ConfigError("spectrum_k", "must be >= 1");
  if (convex_points < 1 || convex_points > 12) throw ConfigError("convex_points", "must be in [1, 12]");
  if (convex_dim < 1 || convex_dim > 3) throw ConfigError("convex_dim", "must be in [1, 3]");
  nonneg("convex_beta", convex_beta);
  if (restarts < 1) throw ConfigError("restarts", "must be >= 1");
}

inline std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  using detail::join;
  using detail::num;
  std::vector<double> w(widths.begin(), widths.end());
  return {{"command", command},
          {"preset", preset},
          {"widths", join(w)},
          {"activation", activation},
          {"grades", std::to_string(grades)},
          {"epsilons", join(epsilons)},
          {"eta", num(eta)},
          {"etas", join(etas)},
          {"eta_min", num(eta_min)},
          {"eta_max", num(eta_max)},
          {"eta_count", std::to_string(eta_count)},
          {"epochs", std::to_string(epochs)},
          {"optimizer", optimizer},
          {"checkpoint_every", std::to_string(checkpoint_every)},
          {"seed", std::to_string(seed)},
          {"kappa", join(kappa)},
          {"phases", join(phases)},
          {"train_points", std::to_string(train_points)},
          {"val_points", std::to_string(val_points)},
          {"image", image},
          {"size", std::to_string(size)},
          {"noise_sigma", num(noise_sigma)},
          {"blur_sigma", num(blur_sigma)},
          {"lambda", num(lambda)},
          {"beta", num(beta)},
          {"alpha_relax", num(alpha_relax)},
          {"inner_epochs", std::to_string(inner_epochs)},
          {"outer", std::to_string(outer)},
          {"spectrum_k", std::to_string(spectrum_k)},
          {"convex_points", std::to_string(convex_points)},
          {"convex_dim", std::to_string(convex_dim)},
          {"convex_beta", num(convex_beta)},
          {"restarts", std::to_string(restarts)},
          {"convex_data", convex_data},
          {"zero_targets", zero_targets ? "true" : "false"},
          {"out", out}};
}

/// Parses `key = value` lines. Blank lines and # comments are skipped.
inline std::map<std::string, std::string> parse_kv(std::istream& is, const std::string& origin = "config") {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw mgdl::IoError("cannot open config '" + path + "'");
  return parse_kv(is, path);
}

/// File values first, then flag overrides; validated.
inline ExperimentConfig parse_config(const std::map<std::string, std::string>& file_kv,
                                     const std::map<std::string, std::string>& flag_kv, const std::string& command = "") {
  ExperimentConfig cfg;
  cfg.command = command;
  for (const auto& [k, v] : file_kv) cfg.set(k, v);
  for (const auto& [k, v] : flag_kv) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

}  // namespace lab
