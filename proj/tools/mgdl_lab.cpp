// mgdl_lab: experiment runner.
//
//   mgdl_lab <command> [--config FILE] [--set key=value ...] [flags]
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical divergence, 4 I/O error.
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lab_config.hpp"
#include "lab_runs.hpp"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

constexpr Flag kFlags[] = {
    {"--eta", "eta", "learning rate"},
    {"--epochs", "epochs", "training epochs (MGDL: per grade)"},
    {"--seed", "seed", "64-bit seed"},
    {"--preset", "preset", "SGDL-1..4, MGDL-1..4 or MSDL"},
    {"--grades", "grades", "MGDL grade count"},
    {"--lambda", "lambda", "TV weight"},
    {"--beta", "beta", "TV splitting penalty"},
    {"--noise-sigma", "noise_sigma", "Gaussian noise std (0..255 scale)"},
    {"--blur-sigma", "blur_sigma", "Gaussian blur std in pixels, 0 = none"},
    {"--out", "out", "parent directory for run output"},
};

int dispatch(const lab::ExperimentConfig& cfg) {
  const std::string& c = cfg.command;
  if (c == "regress-synthetic") lab::run_synthetic_regression(cfg);
  else if (c == "regress-image") lab::run_image_regression(cfg);
  else if (c == "denoise" || c == "deblur") lab::run_image_reconstruction(cfg);
  else if (c == "sweep-lr") lab::run_sweep_lr(cfg);
  else if (c == "spectrum") lab::run_spectrum(cfg);
  else if (c == "convex-check") lab::run_convex_check(cfg);
  else if (c == "phantom") lab::run_phantom(cfg);
  else throw lab::ConfigError("command", "unknown command '" + c + "'");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-grade / single-grade training lab"};
  app.set_version_flag("--version", std::string(MGDL_VERSION));
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> flag_values;
  app.add_option("--config", config_file, "key = value configuration file");
  app.add_option("--set", sets, "override any config key: --set key=value");
  for (const auto& f : kFlags) {
    app.add_option_function<std::string>(f.name, [&flag_values, key = f.key](const std::string& v) { flag_values[key] = v; },
                                         f.help);
  }
  for (const char* cmd : {"regress-synthetic", "regress-image", "denoise", "deblur", "sweep-lr", "spectrum",
                          "convex-check", "phantom"})
    app.add_subcommand(cmd)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    std::map<std::string, std::string> file_kv;
    if (!config_file.empty()) file_kv = lab::read_kv_file(config_file);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw lab::ConfigError(s, "--set expects key=value");
      flag_values[lab::detail::trim(s.substr(0, eq))] = s.substr(eq + 1);
    }
    const lab::ExperimentConfig cfg = lab::parse_config(file_kv, flag_values, app.get_subcommands().front()->get_name());
    return dispatch(cfg);
  } catch (const lab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const lab::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return 3;
  } catch (const mgdl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
}
