#pragma once

#include "lowrank/problems.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace lowrank {

/// The factor iterate (L, R) with X = L R^T.
struct FactorPair {
  Matrix l;  // n1 x r
  Matrix r;  // n2 x r
};

enum class Algorithm {
  Apgd,            // alternating preconditioned updates, pseudo-inverse Grams
  Gd,              // plain simultaneous gradient descent
  ScaledGd,        // simultaneous, true Gram inverse (fails on singular Grams)
  ScaledGdLambda,  // simultaneous, fixed damping lambda
  PrecGd,          // simultaneous, damping tied to the true error (oracle baseline)
  NoisyPrecGd,     // simultaneous, geometrically decaying damping
};

enum class InitKind { Spectral, RandomGaussian, SmallRandom };

/// One solver execution: algorithm, hyperparameters, init policy, seed.
struct SolverRun {
  Algorithm algorithm = Algorithm::Apgd;
  int rank = 0;              // factor rank r (required)
  double eta = 1.0;          // step size, > 0
  double lambda0 = 0.0;      // ScaledGdLambda: fixed damping. NoisyPrecGd: initial
                             // damping; 0 means auto (1e-2 * sigma_1 of the init surrogate).
  double beta = 0.9;         // NoisyPrecGd decay, in (0, 1)
  double prec_c_lambda = 1.0;  // PrecGd damping scale: lambda_t = max(c * ||LR^T - X*||_F, 1e-12)
  int max_iters = 100;
  InitKind init = InitKind::Spectral;
  double init_scale = 0.0;   // RandomGaussian: 0 = auto 1/sqrt(max(n1,n2)). SmallRandom: 0 = auto 1e-6.
  std::uint64_t seed = 0;
  double stop_tol = 0.0;     // stop when rel_error or relative loss change drops
                             // below this; 0 disables early stopping
};

/// Per-iteration observables. Absent quantities (unknown truth, non-sensing
/// problem, uninstrumented run) are NaN; the CSV layer serializes NaN as empty.
struct TraceRecord {
  int iter = 0;
  double loss = 0.0;
  double rel_error = 0.0;         // ||LR^T - X*||_F / ||X*||_F
  double fc = 0.0;                // 1/2 ||A(LR^T - X*)||^2, sensing with truth only
  double grad_dual_norm_l = 0.0;  // filled by diagnostics instrumentation
  double grad_dual_norm_r = 0.0;
  std::int64_t wall_nanos = 0;
};

/// Recorded values are capped at this magnitude and the run flagged diverged;
/// driving baselines past their stability limit is data, not an error.
inline constexpr double kDivergenceCap = 1e300;

struct Trace {
  std::vector<TraceRecord> records;  // records[0] is the init state
  bool diverged = false;
  FactorPair final_pair;
};

/// Factors from the top-r part of the problem's init surrogate:
/// L0 = U0 S0^{1/2}, R0 = V0 S0^{1/2}.
FactorPair spectral_init(const Problem& problem, int r);

/// i.i.d. N(0, scale^2) entries in both factors.
FactorPair random_init(Rng& rng, int n1, int n2, int r, double scale);

/// L first with the gradient at (L_t, R_t) and the pseudo-inverse of R_t's
/// Gram; then R with the gradient re-evaluated at (L_{t+1}, R_t) and the
/// pseudo-inverse of L_{t+1}'s Gram. The re-evaluation is the algorithm.
FactorPair apgd_step(const Problem& problem, const FactorPair& pair, double eta);
/// The two halves of apgd_step, exposed so diagnostics can observe the
/// intermediate (L_{t+1}, R_t) state. apgd_r_step expects apgd_l_step's output.
FactorPair apgd_l_step(const Problem& problem, const FactorPair& pair, double eta);
FactorPair apgd_r_step(const Problem& problem, const FactorPair& mid, double eta);

/// Simultaneous plain gradient step on both factors.
FactorPair gd_step(const Problem& problem, const FactorPair& pair, double eta);

/// Simultaneous preconditioned step with (Gram + lambda I)^{-1}. lambda = 0
/// demands an invertible Gram and throws std::runtime_error otherwise.
FactorPair scaled_gd_step(const Problem& problem, const FactorPair& pair, double eta,
                          double lambda);

/// scaled_gd_step with lambda_t = max(c_lambda * ||L R^T - X*||_F, 1e-12).
/// Requires the ground truth: research baseline only.
FactorPair precgd_step(const Problem& problem, const FactorPair& pair, double eta,
                       const GroundTruth& truth, double c_lambda);

/// scaled_gd_step with the given damping, returning the geometrically decayed
/// damping beta * lambda for the next iteration.
std::pair<FactorPair, double> noisyprecgd_state_step(const Problem& problem,
                                                     const FactorPair& pair, double eta,
                                                     double lambda, double beta);

/// The starting pair run() would use for this configuration: spectral or
/// random init per cfg.init, seeded by cfg.seed. Exposed so callers of
/// run_observed / run_from can reproduce run()'s behavior exactly.
FactorPair initial_pair(const Problem& problem, const SolverRun& cfg);

/// Callback observing each APGD iteration: the iterate before the step, after
/// the L half-step, and after the full step. Only fired for Algorithm::Apgd.
using StepObserver =
    std::function<void(int iter, const FactorPair& before, const FactorPair& mid,
                       const FactorPair& after)>;

/// Initialize per cfg.init and iterate cfg.max_iters times, recording one
/// TraceRecord per state (including the init state). Numeric divergence is
/// recorded (capped values, diverged flag), never thrown.
Trace run(const Problem& problem, const GroundTruth* truth, const SolverRun& cfg);

/// As run(), but from a caller-supplied starting point (cfg.init ignored).
Trace run_from(const Problem& problem, const GroundTruth* truth, const SolverRun& cfg,
               FactorPair start);

/// As run_from(), with an observer receiving every APGD iteration.
Trace run_observed(const Problem& problem, const GroundTruth* truth, const SolverRun& cfg,
                   FactorPair start, const StepObserver& observer);

}  // namespace lowrank
