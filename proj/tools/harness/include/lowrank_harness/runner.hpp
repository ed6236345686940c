#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lowrank/diagnostics.hpp"
#include "lowrank/problems.hpp"
#include "lowrank/solvers.hpp"
#include "lowrank_harness/config.hpp"
#include "lowrank_harness/csv.hpp"
#include "lowrank_harness/presets.hpp"

namespace lowrank::harness {

/// Worker count: LOWRANK_THREADS when set (positive integer), otherwise the
/// number of logical processors.
int thread_count();

/// The shared state of one (panel, seed) cell: ground truth and problem are
/// built once and reused by every solver in the panel.
struct Instance {
  GroundTruth truth;
  std::shared_ptr<const Problem> problem;
  int image_maxval = 0;  // completion-from-image only
};

/// Deterministic instance construction: a single Rng seeded with `seed`
/// drives truth and measurement draws in a fixed order.
Instance make_instance(const ExperimentConfig& cfg, std::uint64_t seed);

struct CellResult {
  std::string solver;
  std::uint64_t seed = 0;
  Trace trace;
  std::vector<IterWitness> witnesses;  // APGD on sensing with truth, else empty
};

/// Runs one solver on an instance. APGD runs on sensing problems are
/// instrumented with a witness collector; its dual norms and angles land in
/// the CSV diagnostic columns.
CellResult run_cell(const Instance& instance, const NamedSolver& solver,
                    std::uint64_t seed, int rank);

/// Trace rows for one cell, tagged with the panel tag.
std::vector<TraceRow> cell_rows(const std::string& tag, const CellResult& cell);

struct RunOutputs {
  std::vector<std::string> files;  // everything written, in creation order
};

/// Runs the panel grid of `cfg` in parallel and writes one trace CSV per
/// solver (rows ordered panel, seed, iteration) under cfg.out_dir.
RunOutputs run_experiment(const ExperimentConfig& cfg);

/// Step-size robustness sweep: every grid step size times {APGD, GD, PrecGD}
/// (or the configured solvers), 100 iterations, final relative error per run;
/// one summary CSV per panel.
RunOutputs run_stepsize_sweep(const ExperimentConfig& cfg);

/// Image completion pipeline: rank-r_star truncation of the input image as
/// ground truth, SNR-calibrated noise, Bernoulli mask; writes trace CSVs, a
/// PSNR summary, the truth image, and one reconstruction image per cell.
RunOutputs run_completion_experiment(const ExperimentConfig& cfg);

/// Dispatch on preset / problem kind to the right pipeline above.
RunOutputs execute(const ExperimentConfig& cfg);

/// Per-iteration inequality checks over an instrumented run per seed:
/// sufficient decrease always, gradient dominance and the angle bound only
/// when the measured init radius is at most 1/2 (their stated hypothesis).
struct CheckSummary {
  int seeds = 0;
  int failures = 0;       // failed inequality instances
  std::string report;     // one line per seed
  bool passed() const { return failures == 0; }
};

CheckSummary run_checks(const ExperimentConfig& cfg);

/// Empirical restricted-isometry estimate for the configured sensing
/// problem at rank level min(2r+1, min(n1, n2)), 100 trials, first seed.
double rip_estimate_for(const ExperimentConfig& cfg);

/// Human-readable dump of the analysis constants at the measured delta-hat
/// and init radius. `defined` is false when the measured radius is outside
/// the formulas' domain (rho^2 >= 1/3), in which case the report says so.
std::string constants_report(const ExperimentConfig& cfg, bool& defined);

}  // namespace lowrank::harness
