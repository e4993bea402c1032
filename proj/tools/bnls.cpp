#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bnls/bnls.hpp"

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kConfig = 2, kSolver = 3 };

int execute(const std::string& config_path, const std::string& out_dir, const bnls::RunOptions& ro,
            std::optional<bnls::Mode> forced) {
  bnls::ExperimentConfig cfg;
  try {
    cfg = bnls::load_config(config_path);
    if (forced == bnls::Mode::GroundState) cfg.mode = bnls::Mode::GroundState;
    if (forced == bnls::Mode::Sweep) {
      if (cfg.sweep.parameter.empty()) throw bnls::ConfigError("config: sweep needs sweep.parameter");
      if (cfg.mode != bnls::Mode::Classify) cfg.mode = bnls::Mode::Sweep;
    }
  } catch (const bnls::ConfigError& e) {
    std::cerr << "bnls: " << e.what() << '\n';
    return kConfig;
  }

  try {
    const auto out = bnls::run_experiment(cfg, ro);
    bnls::write_artifacts(out, out_dir);
    std::cout << out.report.dump(2) << '\n';
    return kOk;
  } catch (const bnls::ConfigError& e) {
    std::cerr << "bnls: " << e.what() << '\n';
    return kConfig;
  } catch (const bnls::CheckpointError& e) {
    std::cerr << "bnls: " << e.what() << '\n';
    return kConfig;
  } catch (const bnls::InvalidParameter& e) {
    std::cerr << "bnls: invalid parameter: " << e.what() << '\n';
    return kConfig;
  } catch (const bnls::SolverFailure& e) {
    std::cerr << "bnls: solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const bnls::LinearSolveError& e) {
    std::cerr << "bnls: solver failure: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "bnls: " << e.what() << '\n';
    return kUnexpected;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial biharmonic NLS laboratory"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  int threads = 1;
  std::uint64_t seed = 1;
  app.add_option("--out-dir", out_dir, "directory for reports, CSV and checkpoints")->capture_default_str();
  app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--seed", seed, "seed for the ground-state perturbation probe")->capture_default_str();

  std::string config;
  auto* run = app.add_subcommand("run", "execute the mode given in the config");
  run->add_option("config", config, "config file")->required();
  auto* sweep = app.add_subcommand("sweep", "parameter sweep (classify-only when mode = classify)");
  sweep->add_option("config", config, "config file")->required();
  auto* gs = app.add_subcommand("groundstate", "ground state and thresholds");
  gs->add_option("config", config, "config file")->required();
  for (auto* sub : {run, sweep, gs}) {
    sub->add_option("--out-dir", out_dir);
    sub->add_option("--threads", threads)->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  std::optional<bnls::Mode> forced;
  if (sweep->parsed()) forced = bnls::Mode::Sweep;
  if (gs->parsed()) forced = bnls::Mode::GroundState;
  return execute(config, out_dir, {threads, seed}, forced);
}
