// Command-line front end: run experiments from JSON configs or built-in
// presets, and probe a configuration's measured constants and per-iteration
// inequalities. Exit codes: 0 success, 1 usage, 2 failed checks, 3 numeric.
#include <cstdio>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "lowrank_harness/config.hpp"
#include "lowrank_harness/presets.hpp"
#include "lowrank_harness/runner.hpp"

namespace {

using namespace lowrank::harness;

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--n1", ov.n1, "rows of the estimated matrix");
  cmd->add_option("--n2", ov.n2, "columns of the estimated matrix");
  cmd->add_option("--r_star", ov.r_star, "ground-truth rank");
  cmd->add_option("--r", ov.r, "factor rank (>= r_star)");
  cmd->add_option("--m", ov.m, "sensing measurement count");
  cmd->add_option("--kappa", ov.kappa, "ground-truth condition number");
  cmd->add_option("--nu", ov.nu, "noise standard deviation");
  cmd->add_option("--p", ov.p, "completion sampling rate in (0, 1]");
  cmd->add_option("--weight_ratio", ov.weight_ratio, "weighted-PCA max/min squared weight");
  cmd->add_option("--snr_db", ov.snr_db, "completion noise level as an SNR in dB");
  cmd->add_option("--out", ov.out_dir, "output directory");
  cmd->add_option("--image_path", ov.image_path, "source image (PGM) for completion");
  cmd->add_option("--problem", ov.problem, "sensing | wpca | onebit | completion");
  cmd->add_option("--seeds", ov.seeds, "comma-separated seed list, e.g. 1,2,3");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank matrix estimation: solvers, experiments, diagnostics"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_arg;
  Overrides ov;

  CLI::App* run_cmd = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run_cmd->add_option("--config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  add_override_flags(run_cmd, ov);

  CLI::App* preset_cmd =
      app.add_subcommand("preset", "Run a built-in experiment preset");
  preset_cmd
      ->add_option("name", preset_arg, "fig1 | fig2 | fig3 | fig4 | fig5 | fig6 | fig78")
      ->required();
  add_override_flags(preset_cmd, ov);
  preset_cmd->get_option("--out")->required();

  CLI::App* check_cmd = app.add_subcommand(
      "check", "Instrument a run and test the per-iteration inequalities");
  check_cmd->add_option("--config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  add_override_flags(check_cmd, ov);

  CLI::App* rip_cmd = app.add_subcommand(
      "rip", "Estimate the restricted-isometry constant of the sensing operator");
  rip_cmd->add_option("--config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  add_override_flags(rip_cmd, ov);

  CLI::App* constants_cmd = app.add_subcommand(
      "constants", "Report the analysis constants at the measured operating point");
  constants_cmd->add_option("--config", config_path, "JSON experiment config")
      ->required()
      ->check(CLI::ExistingFile);
  add_override_flags(constants_cmd, ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig cfg = preset_cmd->parsed() ? preset_defaults(parse_preset(preset_arg))
                                                : load_config(config_path);
    apply_overrides(cfg, ov);

    if (run_cmd->parsed() || preset_cmd->parsed()) {
      const RunOutputs out = execute(cfg);
      for (const std::string& file : out.files) {
        std::cout << "wrote " << file << "\n";
      }
      return 0;
    }
    if (check_cmd->parsed()) {
      const CheckSummary summary = run_checks(cfg);
      std::cout << summary.report;
      if (!summary.passed()) {
        std::cout << summary.failures << " inequality failure(s) across " << summary.seeds
                  << " seed(s)\n";
        return 2;
      }
      std::cout << "all checked inequalities hold across " << summary.seeds << " seed(s)\n";
      return 0;
    }
    if (rip_cmd->parsed()) {
      std::printf("delta_hat = %.6g\n", rip_estimate_for(cfg));
      return 0;
    }
    bool defined = false;
    std::cout << constants_report(cfg, defined);
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  }
}
