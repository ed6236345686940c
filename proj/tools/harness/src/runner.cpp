#include "lowrank_harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "lowrank/numkit.hpp"
#include "lowrank_harness/pgm.hpp"

namespace lowrank::harness {
namespace {

namespace fs = std::filesystem;

/// Runs job(0..count-1) on thread_count() workers. Job order is arbitrary but
/// each job writes only its own pre-allocated slot, so results are
/// deterministic. The first thrown exception is rethrown after all workers
/// finish.
void parallel_for(int count, const std::function<void(int)>& job) {
  if (count <= 0) {
    return;
  }
  const int workers = std::min(thread_count(), count);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= count || failed.load()) {
        return;
      }
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) {
          error = std::current_exception();
        }
        failed.store(true);
      }
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back(body);
    }
    for (auto& t : pool) {
      t.join();
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::string trace_file_name(const ExperimentConfig& cfg, const std::string& solver) {
  return std::string(preset_name(cfg.preset)) + "_" + solver + ".csv";
}

int rip_level(const ExperimentConfig& cfg) {
  return std::min(2 * cfg.r + 1, std::min(cfg.n1, cfg.n2));
}

constexpr int kRipTrials = 100;

double measured_delta(const ExperimentConfig& cfg, const SensingProblem& sensing,
                      std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 1));
  return estimate_rip(rng, sensing, rip_level(cfg), kRipTrials);
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

int thread_count() {
  if (const char* env = std::getenv("LOWRANK_THREADS")) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0' || v < 1 || v > 4096) {
      throw UsageError(std::string("LOWRANK_THREADS must be a positive integer, got \"") +
                       env + "\"");
    }
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

Instance make_instance(const ExperimentConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Instance inst;
  inst.truth = make_ground_truth(rng, cfg.n1, cfg.n2, cfg.r_star, cfg.kappa);
  switch (cfg.kind) {
    case ProblemKind::Sensing:
      inst.problem =
          std::make_shared<SensingProblem>(make_sensing(rng, inst.truth, cfg.m, cfg.nu));
      break;
    case ProblemKind::Wpca:
      inst.problem = std::make_shared<WeightedPcaProblem>(
          make_weighted_pca(rng, inst.truth, cfg.weight_ratio));
      break;
    case ProblemKind::OneBit:
      inst.problem = std::make_shared<OneBitProblem>(make_one_bit(inst.truth));
      break;
    case ProblemKind::Completion:
      inst.problem =
          std::make_shared<CompletionProblem>(make_completion(rng, inst.truth, cfg.p, cfg.nu));
      break;
  }
  return inst;
}

CellResult run_cell(const Instance& instance, const NamedSolver& solver,
                    std::uint64_t seed, int rank) {
  CellResult cell;
  cell.solver = solver.name;
  cell.seed = seed;
  SolverRun run_cfg = solver.run;
  run_cfg.rank = rank;
  run_cfg.seed = seed;
  const Problem& problem = *instance.problem;
  const auto* sensing = dynamic_cast<const SensingProblem*>(&problem);
  if (run_cfg.algorithm == Algorithm::Apgd && sensing != nullptr) {
    WitnessCollector collector(*sensing, instance.truth);
    cell.trace = run_observed(problem, &instance.truth, run_cfg,
                              initial_pair(problem, run_cfg), collector.observer());
    cell.witnesses = collector.witnesses();
    // The witness stepping from state t carries the dual norms at state t.
    const std::size_t filled = std::min(cell.witnesses.size(), cell.trace.records.size());
    for (std::size_t t = 0; t < filled; ++t) {
      cell.trace.records[t].grad_dual_norm_l = cell.witnesses[t].grad_dual_l;
      cell.trace.records[t].grad_dual_norm_r = cell.witnesses[t].grad_dual_r;
    }
  } else {
    cell.trace = run(problem, &instance.truth, run_cfg);
  }
  return cell;
}

std::vector<TraceRow> cell_rows(const std::string& tag, const CellResult& cell) {
  std::vector<TraceRow> rows;
  rows.reserve(cell.trace.records.size());
  for (std::size_t t = 0; t < cell.trace.records.size(); ++t) {
    const TraceRecord& rec = cell.trace.records[t];
    TraceRow row;
    row.preset = tag;
    row.solver = cell.solver;
    row.seed = cell.seed;
    row.iter = rec.iter;
    row.loss = rec.loss;
    row.rel_error = rec.rel_error;
    row.fc = rec.fc;
    row.grad_dual_l = rec.grad_dual_norm_l;
    row.grad_dual_r = rec.grad_dual_norm_r;
    if (t < cell.witnesses.size()) {
      row.cos_r = cell.witnesses[t].cos_r;
      row.cos_l = cell.witnesses[t].cos_l;
    }
    row.wall_nanos = rec.wall_nanos;
    row.diverged = cell.trace.diverged;
    rows.push_back(std::move(row));
  }
  return rows;
}

RunOutputs run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  validate_for_run(cfg);
  fs::create_directories(cfg.out_dir);
  const std::vector<Panel> panels = expand_panels(cfg);
  const int n_panels = static_cast<int>(panels.size());
  const int n_seeds = static_cast<int>(cfg.seeds.size());

  // One job per (panel, seed): the instance is built once there and shared by
  // every solver of the panel.
  std::vector<std::vector<std::vector<CellResult>>> results(n_panels);
  for (auto& per_seed : results) {
    per_seed.resize(n_seeds);
  }
  parallel_for(n_panels * n_seeds, [&](int j) {
    const int p = j / n_seeds;
    const int s = j % n_seeds;
    const Panel& panel = panels[p];
    const std::uint64_t seed = panel.cfg.seeds[s];
    const Instance inst = make_instance(panel.cfg, seed);
    std::vector<CellResult> cells;
    cells.reserve(panel.cfg.solvers.size());
    for (const NamedSolver& solver : panel.cfg.solvers) {
      cells.push_back(run_cell(inst, solver, seed, panel.cfg.r));
    }
    results[p][s] = std::move(cells);
  });

  RunOutputs out;
  for (std::size_t si = 0; si < cfg.solvers.size(); ++si) {
    std::vector<TraceRow> rows;
    for (int p = 0; p < n_panels; ++p) {
      for (int s = 0; s < n_seeds; ++s) {
        std::vector<TraceRow> cell = cell_rows(panels[p].tag, results[p][s][si]);
        rows.insert(rows.end(), std::make_move_iterator(cell.begin()),
                    std::make_move_iterator(cell.end()));
      }
    }
    const std::string path = join_path(cfg.out_dir, trace_file_name(cfg, cfg.solvers[si].name));
    write_trace_csv(path, rows);
    out.files.push_back(path);
  }
  return out;
}

RunOutputs run_stepsize_sweep(const ExperimentConfig& cfg) {
  validate_config(cfg);
  validate_for_run(cfg);
  fs::create_directories(cfg.out_dir);
  const std::vector<Panel> panels = expand_panels(cfg);
  const std::vector<double>& grid = stepsize_grid();
  const std::uint64_t seed = cfg.seeds.front();
  RunOutputs out;
  for (const Panel& panel : panels) {
    const Instance inst = make_instance(panel.cfg, seed);
    const int n_solvers = static_cast<int>(panel.cfg.solvers.size());
    const int n_grid = static_cast<int>(grid.size());
    std::vector<SweepRow> rows(static_cast<std::size_t>(n_solvers) * n_grid);
    parallel_for(n_solvers * n_grid, [&](int j) {
      const int si = j / n_grid;
      const int ei = j % n_grid;
      NamedSolver probe = panel.cfg.solvers[si];
      probe.run.eta = grid[ei];
      probe.run.max_iters = 100;
      probe.run.stop_tol = 0.0;
      const CellResult cell = run_cell(inst, probe, seed, panel.cfg.r);
      SweepRow& row = rows[j];
      row.preset = panel.tag;
      row.solver = probe.name;
      row.eta = grid[ei];
      row.rel_error = cell.trace.records.back().rel_error;
      row.diverged = cell.trace.diverged;
    });
    const std::string path =
        join_path(cfg.out_dir, "sweep_" + tag_to_filename(panel.tag) + ".csv");
    write_sweep_csv(path, rows);
    out.files.push_back(path);
  }
  return out;
}

RunOutputs run_completion_experiment(const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  if (cfg.kind != ProblemKind::Completion) {
    throw UsageError("image completion requires problem = completion");
  }

  // Source image: user-provided PGM or the built-in synthetic one. Loaded
  // dimensions replace n1/n2 before validation.
  PgmImage source;
  if (cfg.image_path.empty()) {
    source.pixels = synthetic_image(512);
    source.maxval = 255;
  } else {
    source = load_pgm(cfg.image_path);
  }
  cfg.n1 = static_cast<int>(source.pixels.rows());
  cfg.n2 = static_cast<int>(source.pixels.cols());
  validate_config(cfg);
  validate_for_run(cfg);
  fs::create_directories(cfg.out_dir);

  // Ground truth: the best rank-r_star approximation of the image.
  const ThinSvd svd = thin_svd(source.pixels, cfg.r_star);
  GroundTruth truth;
  truth.x_star = svd.u * svd.s.asDiagonal() * svd.v.transpose();
  truth.r_star = cfg.r_star;
  truth.sigma_min = svd.s[cfg.r_star - 1];
  truth.kappa = svd.s[0] / svd.s[cfg.r_star - 1];
  if (!(truth.sigma_min > 0.0)) {
    throw UsageError("image rank is below r_star; lower r_star");
  }

  const std::vector<Panel> panels = expand_panels(cfg);
  const int n_panels = static_cast<int>(panels.size());
  const int n_seeds = static_cast<int>(cfg.seeds.size());

  std::vector<std::vector<std::vector<CellResult>>> results(n_panels);
  for (auto& per_seed : results) {
    per_seed.resize(n_seeds);
  }
  parallel_for(n_panels * n_seeds, [&](int j) {
    const int p = j / n_seeds;
    const int s = j % n_seeds;
    const Panel& panel = panels[p];
    const std::uint64_t seed = panel.cfg.seeds[s];

    // Noise first, then the mask, from one seed-derived stream: the noise
    // draw is identical across panels that differ only in sampling rate.
    Rng rng(seed);
    const Matrix s_raw = gauss_matrix(rng, cfg.n1, cfg.n2, 1.0);
    Matrix noisy = truth.x_star;
    if (panel.cfg.snr_db.has_value()) {
      const double target = std::pow(10.0, *panel.cfg.snr_db / 20.0);
      noisy += s_raw * (truth.x_star.norm() / (s_raw.norm() * target));
    } else if (panel.cfg.nu > 0.0) {
      noisy += s_raw * panel.cfg.nu;
    }
    Matrix mask(cfg.n1, cfg.n2);
    for (int i = 0; i < cfg.n1; ++i) {
      for (int jj = 0; jj < cfg.n2; ++jj) {
        mask(i, jj) = rng.uniform() < panel.cfg.p ? 1.0 : 0.0;
      }
    }
    Instance inst;
    inst.truth = truth;
    inst.image_maxval = source.maxval;
    inst.problem = std::make_shared<CompletionProblem>(
        mask, mask.cwiseProduct(noisy), panel.cfg.p);

    std::vector<CellResult> cells;
    cells.reserve(panel.cfg.solvers.size());
    for (const NamedSolver& solver : panel.cfg.solvers) {
      cells.push_back(run_cell(inst, solver, seed, panel.cfg.r));
    }
    results[p][s] = std::move(cells);
  });

  RunOutputs out;
  for (std::size_t si = 0; si < cfg.solvers.size(); ++si) {
    std::vector<TraceRow> rows;
    for (int p = 0; p < n_panels; ++p) {
      for (int s = 0; s < n_seeds; ++s) {
        std::vector<TraceRow> cell = cell_rows(panels[p].tag, results[p][s][si]);
        rows.insert(rows.end(), std::make_move_iterator(cell.begin()),
                    std::make_move_iterator(cell.end()));
      }
    }
    const std::string path = join_path(cfg.out_dir, trace_file_name(cfg, cfg.solvers[si].name));
    write_trace_csv(path, rows);
    out.files.push_back(path);
  }

  const std::string truth_path =
      join_path(cfg.out_dir, std::string(preset_name(cfg.preset)) + "_truth.pgm");
  save_pgm(truth_path, truth.x_star, source.maxval);
  out.files.push_back(truth_path);

  std::vector<PsnrRow> scores;
  for (int p = 0; p < n_panels; ++p) {
    for (int s = 0; s < n_seeds; ++s) {
      for (const CellResult& cell : results[p][s]) {
        const Matrix recon = cell.trace.final_pair.l * cell.trace.final_pair.r.transpose();
        PsnrRow row;
        row.preset = panels[p].tag;
        row.solver = cell.solver;
        row.seed = cell.seed;
        row.psnr_db = psnr(recon, truth.x_star, static_cast<double>(source.maxval));
        scores.push_back(std::move(row));
        const std::string recon_path = join_path(
            cfg.out_dir, tag_to_filename(panels[p].tag) + "_" + cell.solver + "_seed" +
                             std::to_string(cell.seed) + ".pgm");
        save_pgm(recon_path, recon, source.maxval);
        out.files.push_back(recon_path);
      }
    }
  }
  const std::string psnr_path = join_path(cfg.out_dir, "psnr_summary.csv");
  write_psnr_csv(psnr_path, scores);
  out.files.push_back(psnr_path);
  return out;
}

RunOutputs execute(const ExperimentConfig& cfg) {
  if (cfg.preset == Preset::Fig3) {
    return run_stepsize_sweep(cfg);
  }
  if (cfg.kind == ProblemKind::Completion &&
      (cfg.preset == Preset::Fig78 || !cfg.image_path.empty() || cfg.snr_db.has_value())) {
    return run_completion_experiment(cfg);
  }
  return run_experiment(cfg);
}

CheckSummary run_checks(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.kind != ProblemKind::Sensing) {
    throw UsageError("check: per-iteration checks are defined for sensing problems only");
  }
  if (cfg.seeds.empty()) {
    throw UsageError("check: at least one seed is required");
  }
  NamedSolver apgd;
  apgd.name = algorithm_name(Algorithm::Apgd);
  apgd.run.algorithm = Algorithm::Apgd;
  apgd.run.eta = 1.0;
  apgd.run.max_iters = 100;
  if (!cfg.solvers.empty()) {
    const auto it = std::find_if(cfg.solvers.begin(), cfg.solvers.end(), [](const NamedSolver& s) {
      return s.run.algorithm == Algorithm::Apgd;
    });
    if (it == cfg.solvers.end()) {
      throw UsageError("check: instruments the alternating preconditioned method; "
                       "add an apgd solver entry");
    }
    apgd = *it;
  }

  CheckSummary summary;
  summary.seeds = static_cast<int>(cfg.seeds.size());
  std::vector<std::string> lines(cfg.seeds.size());
  std::vector<int> seed_failures(cfg.seeds.size(), 0);
  parallel_for(static_cast<int>(cfg.seeds.size()), [&](int idx) {
    const std::uint64_t seed = cfg.seeds[idx];
    const Instance inst = make_instance(cfg, seed);
    const auto& sensing = dynamic_cast<const SensingProblem&>(*inst.problem);

    SolverRun run_cfg = apgd.run;
    run_cfg.rank = cfg.r;
    run_cfg.seed = seed;
    FactorPair start = initial_pair(*inst.problem, run_cfg);
    const double rho0 = rho_hat(start, inst.truth);

    WitnessCollector collector(sensing, inst.truth);
    run_observed(*inst.problem, &inst.truth, run_cfg, std::move(start), collector.observer());
    const double delta_hat = measured_delta(cfg, sensing, seed);

    // Gradient dominance and the alignment floor hold under the init-radius
    // hypothesis rho0 <= 1/2 (and a nondegenerate isometry constant); the
    // sufficient-decrease check needs neither.
    const bool hypothesis = rho0 <= 0.5 && delta_hat < 1.0;
    TheoremConstants constants{};
    if (hypothesis) {
      constants = compute_constants(delta_hat, rho0, run_cfg.eta, cfg.r, cfg.r_star, cfg.nu,
                                    std::max(cfg.n1, cfg.n2), cfg.m, 1.0, 1.0 + delta_hat,
                                    1.0 - delta_hat);
    }

    int descent_checked = 0, descent_ok = 0;
    int dom_checked = 0, dom_ok = 0, dom_gated = 0;
    int cos_checked = 0, cos_ok = 0;
    for (const IterWitness& w : collector.witnesses()) {
      const DescentReport d = check_descent_lemma(w, run_cfg.eta, delta_hat);
      for (const HalfCheck& half : {d.l, d.r}) {
        if (half.checked) {
          ++descent_checked;
          descent_ok += half.ok ? 1 : 0;
        }
      }
      if (hypothesis && constants.tau_valid) {
        const DominanceReport g = check_grad_dominance(w, constants.tau);
        for (const HalfCheck& half : {g.l, g.r}) {
          if (half.checked) {
            ++dom_checked;
            dom_ok += half.ok ? 1 : 0;
          } else {
            ++dom_gated;
          }
        }
      }
      if (hypothesis) {
        for (double cosine : {w.cos_r, w.cos_l}) {
          ++cos_checked;
          cos_ok += cosine >= constants.c_rho ? 1 : 0;
        }
      }
    }
    const int failures =
        (descent_checked - descent_ok) + (dom_checked - dom_ok) + (cos_checked - cos_ok);
    seed_failures[idx] = failures;

    std::ostringstream line;
    line << "seed " << seed << ": rho0=" << num(rho0) << " delta_hat=" << num(delta_hat)
         << " decrease " << descent_ok << "/" << descent_checked;
    if (!hypothesis) {
      line << "; dominance and alignment skipped (init radius " << num(rho0) << " > 0.5)";
    } else {
      if (constants.tau_valid) {
        line << "; dominance " << dom_ok << "/" << dom_checked;
        if (dom_gated > 0) {
          line << " (" << dom_gated << " below the noise gate)";
        }
      } else {
        line << "; dominance skipped (tau = 0 at delta_hat=" << num(delta_hat) << ")";
      }
      line << "; alignment " << cos_ok << "/" << cos_checked << " vs floor "
           << num(constants.c_rho);
    }
    line << (failures == 0 ? " [ok]" : " [FAIL]");
    lines[idx] = line.str();
  });

  std::ostringstream report;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    report << lines[i] << "\n";
    summary.failures += seed_failures[i];
  }
  summary.report = report.str();
  return summary;
}

double rip_estimate_for(const ExperimentConfig& cfg) {
  validate_config(cfg);
  if (cfg.kind != ProblemKind::Sensing) {
    throw UsageError("rip: the isometry estimate is defined for sensing problems only");
  }
  const std::uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();
  const Instance inst = make_instance(cfg, seed);
  const auto& sensing = dynamic_cast<const SensingProblem&>(*inst.problem);
  return measured_delta(cfg, sensing, seed);
}

std::string constants_report(const ExperimentConfig& cfg, bool& defined) {
  validate_config(cfg);
  if (cfg.kind != ProblemKind::Sensing) {
    throw UsageError("constants: the analysis constants are defined for sensing problems only");
  }
  const std::uint64_t seed = cfg.seeds.empty() ? 1 : cfg.seeds.front();
  const Instance inst = make_instance(cfg, seed);
  const auto& sensing = dynamic_cast<const SensingProblem&>(*inst.problem);
  const double delta_hat = measured_delta(cfg, sensing, seed);

  SolverRun probe;
  probe.algorithm = Algorithm::Apgd;
  probe.rank = cfg.r;
  probe.seed = seed;
  probe.init = InitKind::Spectral;
  const double rho0 = rho_hat(initial_pair(*inst.problem, probe), inst.truth);
  const double eta = cfg.solvers.empty() ? 1.0 : cfg.solvers.front().run.eta;

  std::ostringstream os;
  os << "delta_hat = " << num(delta_hat) << "  (rank level " << rip_level(cfg) << ", "
     << kRipTrials << " trials)\n";
  os << "rho0_hat  = " << num(rho0) << "  (spectral init, seed " << seed << ")\n";
  if (rho0 * rho0 >= 1.0 / 3.0 || delta_hat >= 1.0) {
    defined = false;
    os << "constants undefined: the measured point is outside the contraction domain "
          "(needs rho0^2 < 1/3 and delta_hat < 1)\n";
    return os.str();
  }
  defined = true;
  const TheoremConstants k =
      compute_constants(delta_hat, rho0, eta, cfg.r, cfg.r_star, cfg.nu,
                        std::max(cfg.n1, cfg.n2), cfg.m, 1.0, 1.0 + delta_hat, 1.0 - delta_hat);
  os << "eta       = " << num(eta) << "\n";
  os << "c_rho     = " << num(k.c_rho) << "\n";
  os << "tau       = " << num(k.tau)
     << (k.tau_valid ? "\n" : "  (zero: sqrt(r + r_star) * delta_hat exceeds the radius margin)\n");
  os << "eta_c     = " << num(k.eta_c) << "\n";
  os << "q_f       = " << num(k.q_f) << "\n";
  os << "c_delta   = " << num(k.c_delta) << "\n";
  os << "c3        = " << num(k.c3) << "\n";
  os << "e_opt     = " << num(k.e_opt) << "\n";
  os << "zeta      = " << num(k.zeta) << "\n";
  os << "q_g       = " << num(k.q_g) << "\n";
  os << "l_g       = " << num(k.l_g) << "\n";
  os << "mu        = " << num(k.mu) << "\n";
  return os.str();
}

}  // namespace lowrank::harness
