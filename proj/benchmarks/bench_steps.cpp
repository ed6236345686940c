// Microbenchmarks for the per-iteration cost of each solver step and the
// dense SVD used by spectral initialization.
#include <benchmark/benchmark.h>

#include "lowrank/numkit.hpp"
#include "lowrank/problems.hpp"
#include "lowrank/solvers.hpp"

namespace {

using namespace lowrank;

struct Fixture {
  GroundTruth truth;
  SensingProblem problem;
  SolverRun cfg;
  FactorPair start;

  static Fixture make(Algorithm algorithm, int n, int r_star, int r, int m) {
    Rng rng(7);
    GroundTruth truth = make_ground_truth(rng, n, n, r_star, 10.0);
    SensingProblem problem = make_sensing(rng, truth, m, 0.0);
    SolverRun cfg;
    cfg.algorithm = algorithm;
    cfg.rank = r;
    cfg.eta = algorithm == Algorithm::Gd ? 0.1 : 0.5;
    cfg.max_iters = 1;
    cfg.seed = 7;
    FactorPair start = initial_pair(problem, cfg);
    return {std::move(truth), std::move(problem), cfg, std::move(start)};
  }
};

void run_one_step(benchmark::State& state, Algorithm algorithm) {
  const Fixture f = Fixture::make(algorithm, 20, 5, 5, 1000);
  for (auto _ : state) {
    Trace trace = run_from(f.problem, &f.truth, f.cfg, f.start);
    benchmark::DoNotOptimize(trace.records.back().loss);
  }
}

void BM_ApgdStep(benchmark::State& state) { run_one_step(state, Algorithm::Apgd); }
void BM_GdStep(benchmark::State& state) { run_one_step(state, Algorithm::Gd); }
void BM_ScaledGdStep(benchmark::State& state) { run_one_step(state, Algorithm::ScaledGd); }

void BM_ThinSvd256(benchmark::State& state) {
  Rng rng(11);
  const Matrix a = gauss_matrix(rng, 256, 256, 1.0);
  for (auto _ : state) {
    ThinSvd svd = thin_svd(a, 5);
    benchmark::DoNotOptimize(svd.s[0]);
  }
}

BENCHMARK(BM_ApgdStep)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GdStep)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ScaledGdStep)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ThinSvd256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
