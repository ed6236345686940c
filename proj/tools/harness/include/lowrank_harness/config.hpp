#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lowrank/solvers.hpp"

namespace lowrank::harness {

/// Bad flags, malformed or unreadable configs, unknown keys: exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Preset { Fig1, Fig2, Fig3, Fig4, Fig5, Fig6, Fig78, Custom };

const char* preset_name(Preset preset);
Preset parse_preset(const std::string& name);  // UsageError on unknown names

enum class ProblemKind { Sensing, Wpca, OneBit, Completion };

const char* problem_kind_name(ProblemKind kind);
ProblemKind parse_problem_kind(const std::string& name);

/// A solver entry plus the name used for its CSV file and `solver` column.
struct NamedSolver {
  std::string name;
  SolverRun run;  // rank and seed are filled per experiment cell
};

const char* algorithm_name(Algorithm algorithm);

/// One experiment description. Presets fill every field with the source
/// figure's values; a JSON config (or command-line flag) overrides any of
/// them one-for-one.
struct ExperimentConfig {
  Preset preset = Preset::Custom;
  ProblemKind kind = ProblemKind::Sensing;
  int n1 = 20;
  int n2 = 20;
  int r_star = 5;
  int r = 5;
  double kappa = 1.0;
  int m = 1000;              // sensing measurement count
  double nu = 0.0;           // noise standard deviation
  double p = 0.5;            // completion sampling rate
  double weight_ratio = 4.0; // wpca max W^2 / min W^2
  std::vector<NamedSolver> solvers;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::string image_path;    // completion only; empty = built-in synthetic image
  std::optional<double> snr_db;  // completion noise level as a signal-to-noise ratio
};

/// Parse a JSON config text. Key set is strict: unknown keys are a UsageError.
/// A "preset" key loads that preset's defaults first; every other key then
/// overrides the corresponding field.
ExperimentConfig parse_config(const std::string& json_text);

/// parse_config over the contents of a file; unreadable file is a UsageError.
ExperimentConfig load_config(const std::string& path);

/// Command-line values that override config keys one-for-one.
struct Overrides {
  std::optional<int> n1, n2, r_star, r, m;
  std::optional<double> kappa, nu, p, weight_ratio, snr_db;
  std::optional<std::string> out_dir, image_path, problem, seeds;  // seeds: "1,2,3"
};

void apply_overrides(ExperimentConfig& cfg, const Overrides& overrides);

/// Structural checks shared by every subcommand: rank ordering, dimension
/// bounds, and the desk-scale caps (sensing n <= 64 and m <= 20*n*r; other
/// kinds n <= 1024). Throws UsageError.
void validate_config(const ExperimentConfig& cfg);

/// Additional checks for executing runs: at least one solver (with distinct
/// names) and at least one seed. Throws UsageError.
void validate_for_run(const ExperimentConfig& cfg);

}  // namespace lowrank::harness
