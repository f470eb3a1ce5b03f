// Command implementations for mgdl_lab. Each run writes fixed file names
// into its own directory and finishes with manifest.json.
#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lab_config.hpp"
#include "mgdl/convex.hpp"
#include "mgdl/csv.hpp"
#include "mgdl/imaging.hpp"
#include "mgdl/spectrum.hpp"
#include "mgdl/synthetic.hpp"
#include "mgdl/training.hpp"

namespace lab {

namespace fs = std::filesystem;
using namespace mgdl;

inline std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read '" + path + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 15];
  while (is) {
    is.read(buf, sizeof buf);
    if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

/// Output directory plus the list of files written into it.
class RunDir {
 public:
  RunDir(const ExperimentConfig& cfg) : cfg_(cfg), start_(std::chrono::system_clock::now()) {
    const std::time_t t = std::chrono::system_clock::to_time_t(start_);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    const std::string base = cfg.command + "_" + std::to_string(cfg.seed) + "_" + stamp;
    fs::path p = fs::path(cfg.out) / base;
    for (int i = 1; fs::exists(p); ++i) p = fs::path(cfg.out) / (base + "-" + std::to_string(i));
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create output directory '" + p.string() + "': " + ec.message());
    dir_ = p;
  }

  std::string path(const std::string& name) {
    files_.push_back(name);
    return (dir_ / name).string();
  }
  const fs::path& dir() const { return dir_; }

  /// Written last; its presence marks the run's artifacts as final.
  void write_manifest(const nlohmann::ordered_json& results) {
    nlohmann::ordered_json m;
    m["version"] = std::string("mgdl_lab ") + MGDL_VERSION;
    nlohmann::ordered_json c;
    for (const auto& [k, v] : cfg_.echo()) c[k] = v;
    m["config"] = c;
    const auto end = std::chrono::system_clock::now();
    m["started_unix"] = std::chrono::duration_cast<std::chrono::seconds>(start_.time_since_epoch()).count();
    m["wall_seconds"] = std::chrono::duration<double>(end - start_).count();
    m["results"] = results;
    nlohmann::ordered_json f;
    for (const auto& name : files_) f[name] = sha256_file((dir_ / name).string());
    m["files"] = f;
    const fs::path tmp = dir_ / "manifest.json.tmp";
    {
      std::ofstream os(tmp);
      if (!os) throw IoError("cannot write manifest in '" + dir_.string() + "'");
      os << m.dump(2) << '\n';
      if (!os) throw IoError("manifest write failed");
    }
    fs::rename(tmp, dir_ / "manifest.json");
  }

 private:
  const ExperimentConfig& cfg_;
  std::chrono::system_clock::time_point start_;
  fs::path dir_;
  std::vector<std::string> files_;
};

// ---------------------------------------------------------------------------
// Shared pieces

inline Activation parse_activation(const std::string& s) {
  if (s == "relu") return Activation::relu();
  if (s == "softplus") return Activation::softplus(1.0);
  if (s.rfind("softplus:", 0) == 0) return Activation::softplus(std::stod(s.substr(9)));
  throw ConfigError("activation", "expected relu or softplus[:beta]");
}

inline TrainConfig train_config(const ExperimentConfig& cfg, double eta, std::size_t epochs) {
  TrainConfig t;
  t.eta = eta;
  t.epochs = epochs;
  t.optimizer = cfg.optimizer == "adam" ? Optimizer::Adam : Optimizer::GD;
  t.checkpoint_every = cfg.checkpoint_every;
  t.seed = cfg.seed;
  return t;
}

enum class Family { Sgdl, Mgdl, Msdl };

inline Family family_of(const ExperimentConfig& cfg) {
  if (!cfg.widths.empty() || cfg.preset.rfind("SGDL", 0) == 0) return Family::Sgdl;
  if (cfg.preset.rfind("MGDL", 0) == 0) return Family::Mgdl;
  if (cfg.preset == "MSDL") return Family::Msdl;
  throw ConfigError("preset", "unknown preset '" + cfg.preset + "'");
}

inline Arch sgdl_arch(const ExperimentConfig& cfg, std::size_t input_dim) {
  Arch a;
  if (!cfg.widths.empty()) {
    a.widths = cfg.widths;
  } else {
    try {
      a = preset_arch(cfg.preset);
    } catch (const std::invalid_argument& e) {
      throw ConfigError("preset", e.what());
    }
  }
  a.activation = parse_activation(cfg.activation);
  if (a.input_dim() != input_dim)
    throw ConfigError(cfg.widths.empty() ? "preset" : "widths",
                      "input width " + std::to_string(a.input_dim()) + " does not match data width " +
                          std::to_string(input_dim));
  return a;
}

inline MgdlConfig mgdl_config(const ExperimentConfig& cfg, double eta) {
  try {
    (void)preset_arch(cfg.preset, 1);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("preset", e.what());
  }
  MgdlConfig mc;
  mc.family = cfg.preset;
  mc.grades = cfg.grades;
  mc.epsilons = cfg.epsilons;
  mc.per_grade = {train_config(cfg, eta, cfg.epochs)};
  return mc;
}

struct SyntheticData {
  SineTarget target;
  Dataset train, val;
};

inline SyntheticData synthetic_data(const ExperimentConfig& cfg) {
  std::optional<std::vector<double>> ph;
  if (!cfg.phases.empty()) ph = cfg.phases;
  SyntheticData s{make_sine_target(cfg.kappa, cfg.seed, ph), {}, {}};
  s.train = equispaced_set(s.target, cfg.train_points);
  s.val = uniform_set(s.target, cfg.val_points, cfg.seed);
  return s;
}

inline void write_trace_csv(const std::string& path, const TrainTrace& tr, const SpectrumTrace* sp = nullptr) {
  std::vector<std::string> head{"epoch", "loss", "val_loss"};
  if (sp) {
    head.push_back("eig_min");
    head.push_back("eig_max");
  }
  CsvWriter w(path, head);
  for (std::size_t i = 0; i < tr.checkpoints.size(); ++i) {
    const auto& c = tr.checkpoints[i];
    w.cell(c.epoch).cell(c.loss).cell(c.val_loss);
    if (sp) {
      const bool ok = i < sp->records.size() && !sp->records[i].failed && !sp->records[i].smallest.empty();
      w.cell(ok ? sp->records[i].smallest.front() : std::numeric_limits<double>::quiet_NaN());
      w.cell(ok ? sp->records[i].largest.front() : std::numeric_limits<double>::quiet_NaN());
    }
    w.end();
  }
}

inline void write_spectrum_csv(const std::string& path, const SpectrumTrace& sp) {
  std::size_t k = 0;
  for (const auto& r : sp.records) k = std::max(k, r.smallest.size());
  std::vector<std::string> head{"epoch", "loss"};
  for (std::size_t i = 1; i <= k; ++i) head.push_back("eig_small_" + std::to_string(i));
  for (std::size_t i = 1; i <= k; ++i) head.push_back("eig_large_" + std::to_string(i));
  head.push_back("alpha_running");
  head.push_back("tau_running");
  CsvWriter w(path, head);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : sp.records) {
    w.cell(r.epoch).cell(r.loss);
    for (std::size_t i = 0; i < k; ++i) w.cell(i < r.smallest.size() ? r.smallest[i] : nan);
    for (std::size_t i = 0; i < k; ++i) w.cell(i < r.largest.size() ? r.largest[i] : nan);
    w.cell(r.alpha_running).cell(r.tau_running);
    w.end();
  }
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
  CsvWriter w(path, {"eta", "train_loss", "val_loss", "diverged"});
  for (const auto& r : rows) w.cell(r.eta).cell(r.train_loss).cell(r.val_loss).cell(std::string(r.diverged ? "1" : "0")).end();
}

inline void write_psnr_csv(const std::string& path, const std::vector<PsnrRow>& rows) {
  CsvWriter w(path, {"outer_iter", "psnr_train", "psnr_test", "objective"});
  for (const auto& r : rows) w.cell(r.outer).cell(r.psnr_train).cell(r.psnr_test).cell(r.objective).end();
}

// ---------------------------------------------------------------------------
// One synthetic training run, any family.

struct SyntheticRun {
  SweepRow row;
  std::optional<SgdlResult> sgdl;
  std::optional<GradeStack> mgdl;
  std::optional<MsdlResult> msdl;
};

inline SyntheticRun synthetic_run(const ExperimentConfig& cfg, const SyntheticData& d, double eta,
                                  bool keep_params = false) {
  SyntheticRun out;
  out.row.eta = eta;
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  switch (family_of(cfg)) {
    case Family::Sgdl: {
      const Arch a = sgdl_arch(cfg, 1);
      TrainConfig tc = train_config(cfg, eta, cfg.epochs);
      tc.keep_checkpoint_params = keep_params;
      SgdlResult r = train_sgdl(a, d.train, tc, &d.val);
      out.row.diverged = r.trace.diverged;
      out.row.train_loss = r.trace.final_loss;
      out.row.val_loss = r.trace.diverged ? nan : r.trace.checkpoints.back().val_loss;
      out.sgdl = std::move(r);
      break;
    }
    case Family::Mgdl: {
      MgdlConfig mc = mgdl_config(cfg, eta);
      mc.per_grade[0].keep_checkpoint_params = keep_params;
      GradeStack s = train_mgdl(mc, d.train, &d.val);
      out.row.diverged = s.diverged;
      out.row.train_loss = s.diverged ? nan : mgdl_loss(s, d.train);
      out.row.val_loss = s.diverged ? nan : mgdl_loss(s, d.val);
      out.mgdl = std::move(s);
      break;
    }
    case Family::Msdl: {
      MsdlArch m = std::get<MsdlArch>(preset("MSDL"));
      for (auto& s : m.subnets) s.activation = parse_activation(cfg.activation);
      TrainConfig tc = train_config(cfg, eta, cfg.epochs);
      tc.keep_checkpoint_params = keep_params;
      MsdlResult r = train_msdl(m, d.train, tc, &d.val);
      out.row.diverged = r.trace.diverged;
      out.row.train_loss = r.trace.final_loss;
      out.row.val_loss = r.trace.diverged ? nan : r.trace.checkpoints.back().val_loss;
      out.msdl = std::move(r);
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

inline void run_synthetic_regression(const ExperimentConfig& cfg) {
  const SyntheticData d = synthetic_data(cfg);
  SyntheticRun r = synthetic_run(cfg, d, cfg.eta);
  RunDir rd(cfg);
  nlohmann::ordered_json res;
  if (r.sgdl) {
    write_trace_csv(rd.path("loss.csv"), r.sgdl->trace);
    if (!r.row.diverged) write_params(rd.path("model.bin"), r.sgdl->params);
  } else if (r.msdl) {
    write_trace_csv(rd.path("loss.csv"), r.msdl->trace);
  } else {
    const GradeStack& s = *r.mgdl;
    CsvWriter w(rd.path("loss.csv"), {"grade", "epoch", "loss", "val_loss"});
    auto rows = [&](std::size_t l, const TrainTrace& tr) {
      for (const auto& c : tr.checkpoints) w.cell(l + 1).cell(c.epoch).cell(c.loss).cell(c.val_loss).end();
    };
    for (std::size_t l = 0; l < s.grades.size(); ++l) rows(l, s.grades[l].trace);
    if (s.failed_trace) rows(s.grades.size(), *s.failed_trace);
    for (std::size_t l = 0; l < s.grades.size(); ++l)
      write_params(rd.path("grade" + std::to_string(l + 1) + ".bin"), s.grades[l].params);
    res["residual_norms"] = s.residual_norms;
  }
  res["train_loss"] = r.row.train_loss;
  res["val_loss"] = r.row.val_loss;
  res["diverged"] = r.row.diverged;
  rd.write_manifest(res);
  if (r.row.diverged) throw DivergenceError("training diverged at eta = " + fmt_real(cfg.eta));
}

inline std::vector<double> sweep_grid(const ExperimentConfig& cfg) {
  return cfg.etas.empty() ? log_grid(cfg.eta_min, cfg.eta_max, cfg.eta_count) : cfg.etas;
}

inline void run_sweep_lr(const ExperimentConfig& cfg) {
  const SyntheticData d = synthetic_data(cfg);
  const auto etas = sweep_grid(cfg);
  const auto rows = lr_sweep([&](double eta) { return synthetic_run(cfg, d, eta).row; }, etas);
  RunDir rd(cfg);
  write_sweep_csv(rd.path("sweep.csv"), rows);
  nlohmann::ordered_json res;
  if (auto b = best_row(rows)) {
    res["best_eta"] = b->eta;
    res["best_val_loss"] = b->val_loss;
  }
  std::size_t div = 0;
  for (const auto& r : rows) div += r.diverged;
  res["diverged_runs"] = div;
  rd.write_manifest(res);
}

inline void run_spectrum(const ExperimentConfig& cfg) {
  const SyntheticData d = synthetic_data(cfg);
  RunDir rd(cfg);
  nlohmann::ordered_json res;
  bool diverged = false;
  const Family fam = family_of(cfg);
  if (fam == Family::Mgdl) {
    MgdlConfig mc = mgdl_config(cfg, cfg.eta);
    std::vector<SpectrumTracker> trackers;
    for (std::size_t l = 0; l < mc.grades; ++l) trackers.emplace_back(cfg.eta, cfg.spectrum_k);
    GradeObserver obs = [&](std::size_t l, std::size_t epoch, const Arch& sa, const Dataset& gd, const Vector& w,
                            double loss) { trackers[l].record(epoch, hess_mse(sa, ParamVec(ParamVec::layout_of(sa), w), gd), loss); };
    GradeStack s = train_mgdl(mc, d.train, &d.val, obs);
    diverged = s.diverged;
    nlohmann::ordered_json grades = nlohmann::ordered_json::array();
    for (std::size_t l = 0; l < mc.grades; ++l) {
      const SpectrumTrace& t = trackers[l].trace();
      if (t.records.empty()) continue;
      write_spectrum_csv(rd.path("spectrum_grade" + std::to_string(l + 1) + ".csv"), t);
      if (l < s.grades.size())
        write_trace_csv(rd.path("loss_grade" + std::to_string(l + 1) + ".csv"), s.grades[l].trace, &t);
      grades.push_back({{"grade", l + 1}, {"alpha_hat", t.alpha_hat()}, {"tau_hat", t.tau_hat()},
                        {"eig_min", t.min_eigenvalue()}, {"eig_max", t.max_eigenvalue()}});
    }
    res["grades"] = grades;
  } else {
    TrainConfig tc = train_config(cfg, cfg.eta, cfg.epochs);
    if (tc.optimizer != Optimizer::GD) throw ConfigError("optimizer", "spectrum tracking needs plain gd");
    SpectrumRun sr;
    if (fam == Family::Sgdl) {
      const Arch a = sgdl_arch(cfg, 1);
      const MseObjective obj(a, d.train);
      sr = track_spectrum(obj, init_params(a, cfg.seed).data(), tc, cfg.spectrum_k);
    } else {
      MsdlArch m = std::get<MsdlArch>(preset("MSDL"));
      const MsdlObjective obj{m, &d.train};
      sr = track_spectrum(obj, concat_params(init_msdl_params(m, cfg.seed)), tc, cfg.spectrum_k);
    }
    diverged = sr.train.diverged;
    write_spectrum_csv(rd.path("spectrum.csv"), sr.spectrum);
    write_trace_csv(rd.path("loss.csv"), sr.train, &sr.spectrum);
    res["alpha_hat"] = sr.spectrum.alpha_hat();
    res["tau_hat"] = sr.spectrum.tau_hat();
    res["eig_min"] = sr.spectrum.min_eigenvalue();
    res["eig_max"] = sr.spectrum.max_eigenvalue();
  }
  res["diverged"] = diverged;
  rd.write_manifest(res);
  if (diverged) throw DivergenceError("training diverged at eta = " + fmt_real(cfg.eta));
}

// ---------------------------------------------------------------------------
// Images

inline Mat load_truth(const ExperimentConfig& cfg) {
  Mat img;
  if (cfg.image.empty()) {
    PhantomSpec ps;
    ps.n = cfg.size;
    img = phantom(ps);
  } else {
    img = read_pgm(cfg.image);
  }
  if (img.rows() != img.cols()) throw ConfigError("image", "image must be square");
  return img;
}

inline void run_phantom(const ExperimentConfig& cfg) {
  PhantomSpec ps;
  ps.n = cfg.size;
  RunDir rd(cfg);
  write_pgm(rd.path("phantom.pgm"), phantom(ps));
  rd.write_manifest({{"size", cfg.size}});
}

/// Coordinate regression on the quarter grid; PSNR on the quarter grid (train) and all pixels (test).
inline void run_image_regression(const ExperimentConfig& cfg) {
  const Mat truth = load_truth(cfg);
  const std::size_t n = truth.rows();
  const Split sp = quarter_train_split(n);
  const Dataset train = pixel_dataset(truth, sp.train);
  const Mat grid = coord_grid(n);
  std::vector<PsnrRow> trace;
  auto eval = [&](const Vector& pred) {
    const Mat rec = clamp_image(to_intensity(Mat(n, n, pred)));
    return std::pair{psnr_subset(truth, rec, sp.train), psnr(truth, rec)};
  };
  RunDir rd(cfg);
  nlohmann::ordered_json res;
  bool diverged = false;
  Mat rec;
  if (family_of(cfg) == Family::Mgdl) {
    MgdlConfig mc = mgdl_config(cfg, cfg.eta);
    GradeStack s = train_mgdl(mc, train);
    diverged = s.diverged;
    if (!s.empty()) {
      for (std::size_t l = 0; l < s.grades.size(); ++l) {
        for (const auto& c : s.grades[l].trace.checkpoints)
          trace.push_back({l * mc.per_grade[0].epochs + c.epoch, 0.0, 0.0, c.loss});
      }
      const auto [ptr, pte] = eval(mgdl_predict(s, grid));
      trace.back().psnr_train = ptr;
      trace.back().psnr_test = pte;
      rec = render_prediction(s, n);
    }
  } else {
    const Arch a = sgdl_arch(cfg, 2);
    const MseObjective obj(a, train);
    Vector w = init_params(a, cfg.seed).data();
    Observer obs = [&](std::size_t k, const Vector& wv, double loss) {
      const ForwardBatch fb = forward_batch(a, ParamVec(obj.layout, wv), grid.transpose());
      const auto [ptr, pte] = eval(fb.output().data());
      trace.push_back({k, ptr, pte, loss});
    };
    const TrainTrace tr = run_optimizer(obj, w, train_config(cfg, cfg.eta, cfg.epochs), obs);
    diverged = tr.diverged;
    if (!diverged) rec = render_prediction(a, ParamVec(obj.layout, w), n);
  }
  write_psnr_csv(rd.path("psnr.csv"), trace);
  if (!diverged) {
    write_pgm(rd.path("reconstruction.pgm"), rec);
    res["psnr_test"] = psnr(truth, rec);
  }
  res["diverged"] = diverged;
  rd.write_manifest(res);
  if (diverged) throw DivergenceError("image regression diverged");
}

/// Denoising (blur_sigma = 0) or deblurring through the TV prox-gradient loop on all pixels.
inline void run_image_reconstruction(const ExperimentConfig& cfg) {
  const Mat truth = load_truth(cfg);
  const std::size_t n = truth.rows();
  Mat observed = gaussian_blur_apply(truth, cfg.blur_sigma);
  observed = add_gaussian_noise(observed, cfg.noise_sigma, cfg.seed);

  ImageProblem pb;
  pb.n = n;
  pb.observed = to_unit(observed);
  pb.inputs = coord_grid(n);
  pb.blur_sigma = cfg.blur_sigma;
  TvConfig tv;
  tv.lambda = cfg.lambda;
  tv.beta = cfg.beta;
  tv.alpha_relax = cfg.alpha_relax;
  tv.inner_epochs = cfg.inner_epochs;
  tv.eta = cfg.eta;
  tv.optimizer = cfg.optimizer == "gd" ? Optimizer::GD : Optimizer::Adam;
  const Mat truth_unit = to_unit(truth);

  RunDir rd(cfg);
  nlohmann::ordered_json res;
  std::vector<PsnrRow> trace;
  Mat rec;
  bool diverged = false, monotone = true;
  if (family_of(cfg) == Family::Mgdl) {
    const Arch g1 = preset_arch(cfg.preset, 1);
    TvMgdlConfig mc;
    mc.width = g1.widths[1];
    mc.per_grade = mgdl_layers_per_grade(cfg.preset);
    mc.grades = cfg.grades;
    mc.epsilons = cfg.epsilons;
    mc.outer_per_grade = std::max<std::size_t>(1, cfg.outer / cfg.grades);
    mc.seed = cfg.seed;
    TvStack st = prox_grad_tv_mgdl(pb, tv, mc, truth_unit);
    diverged = st.diverged;
    monotone = st.u_monotone;
    for (const auto& g : st.grades) trace.insert(trace.end(), g.trace.begin(), g.trace.end());
    if (!diverged) rec = render_stack(st);
  } else {
    const Arch a = sgdl_arch(cfg, 2);
    TvRun r = prox_grad_tv_train(a, init_params(a, cfg.seed), pb, tv, cfg.outer, truth_unit);
    diverged = r.diverged;
    monotone = r.u_monotone();
    trace = std::move(r.trace);
    if (!diverged) rec = clamp_image(to_intensity(tv_network_image(a, r.params, pb)));
  }
  write_psnr_csv(rd.path("psnr.csv"), trace);
  write_pgm(rd.path("observed.pgm"), observed);
  if (!diverged) write_pgm(rd.path("reconstruction.pgm"), rec);
  res["psnr_observed"] = psnr(truth, clamp_image(observed));
  if (!diverged) res["psnr_reconstruction"] = psnr(truth, rec);
  res["u_update_monotone"] = monotone;
  res["diverged"] = diverged;
  rd.write_manifest(res);
  if (diverged) throw DivergenceError("TV reconstruction diverged");
}

// ---------------------------------------------------------------------------
// Convex check

struct ConvexInstance {
  Mat x;
  Vector e;
};

inline ConvexInstance random_convex_instance(std::size_t n, std::size_t d, std::uint64_t seed, bool zero_targets) {
  SplitMix64 rng(stream_seed(seed, 0x637678ULL));
  ConvexInstance ins{Mat(n, d), Vector(n, 0.0)};
  for (double& v : ins.x.data()) v = rng.normal();
  if (!zero_targets)
    for (double& v : ins.e) v = rng.normal();
  return ins;
}

inline ConvexInstance read_convex_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (detail::trim(line).empty() || line[0] == '#') continue;
    rows.push_back(detail::to_reals("convex_data", line));
  }
  if (rows.empty() || rows[0].size() < 2) throw ConfigError("convex_data", "need rows x_1..x_d,e");
  const std::size_t d = rows[0].size() - 1;
  ConvexInstance ins{Mat(rows.size(), d), Vector(rows.size())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d + 1) throw ConfigError("convex_data", "ragged rows");
    for (std::size_t c = 0; c < d; ++c) ins.x(i, c) = rows[i][c];
    ins.e[i] = rows[i][d];
  }
  if (d > 3) throw ConfigError("convex_data", "at most 3 input columns");
  return ins;
}

inline void run_convex_check(const ExperimentConfig& cfg) {
  const ConvexInstance ins = cfg.convex_data.empty()
                                 ? random_convex_instance(cfg.convex_points, cfg.convex_dim, cfg.seed, cfg.zero_targets)
                                 : read_convex_csv(cfg.convex_data);
  NonconvexOptions no;
  no.restarts = cfg.restarts;
  const ConvexCheck c = convex_check(ins.x, ins.e, cfg.convex_beta, cfg.seed, no);
  RunDir rd(cfg);
  {
    CsvWriter w(rd.path("convex.csv"), {"patterns", "convex_objective", "reconstructed_objective",
                                        "nonconvex_objective", "gap", "m_star", "oracle_width", "constraint_residual"});
    w.cell(c.patterns).cell(c.convex).cell(c.reconstructed).cell(c.nonconvex).cell(c.gap()).cell(c.m_star);
    w.cell(c.oracle_width).cell(c.constraint_residual).end();
  }
  rd.write_manifest({{"convex_objective", c.convex}, {"nonconvex_objective", c.nonconvex}, {"gap", c.gap()},
                     {"m_star", c.m_star}});
}

}  // namespace lab
