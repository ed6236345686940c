#include "lowrank/solvers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lowrank {

namespace {

constexpr double kPrecGdLambdaFloor = 1e-12;

double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

Matrix factor_grad_l(const Problem& problem, const FactorPair& pair) {
  return problem.grad(pair.l * pair.r.transpose()) * pair.r;
}

Matrix factor_grad_r(const Problem& problem, const FactorPair& pair) {
  return problem.grad(pair.l * pair.r.transpose()).transpose() * pair.l;
}

void require_finite(const Matrix& g, const char* where) {
  if (!g.allFinite()) {
    throw std::runtime_error(std::string(where) + ": non-finite gradient");
  }
}

// (Gram + lambda I)^{-1} applied from the right. lambda = 0 requires an
// invertible Gram: detected via the eigenvalue spread, mirroring the
// pseudo-inverse cutoff.
Matrix damped_gram_solve(const Matrix& factor, const Matrix& grad, double lambda,
                         const char* where) {
  Matrix gram = factor.transpose() * factor;
  gram = 0.5 * (gram + gram.transpose()).eval();
  if (lambda == 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    if (es.info() != Eigen::Success) {
      throw std::runtime_error(std::string(where) + ": eigendecomposition failed");
    }
    const double max_ev = es.eigenvalues().maxCoeff();
    const double min_ev = es.eigenvalues().minCoeff();
    if (!(min_ev > kGramPinvCutoff * max_ev) || !(max_ev > 0.0)) {
      throw std::runtime_error(std::string(where) + ": singular Gram at lambda = 0");
    }
  } else {
    gram.diagonal().array() += lambda;
  }
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) {
    throw std::runtime_error(std::string(where) + ": Gram factorization failed");
  }
  return ldlt.solve(grad.transpose()).transpose();
}

}  // namespace

FactorPair spectral_init(const Problem& problem, int r) {
  if (r < 1 || r > std::min(problem.rows(), problem.cols())) {
    throw std::invalid_argument("spectral_init: rank out of range");
  }
  const Matrix z = problem.init_surrogate();
  const ThinSvd svd = thin_svd(z, r);
  const Vector root_s = svd.s.cwiseMax(0.0).cwiseSqrt();
  FactorPair pair;
  pair.l = svd.u * root_s.asDiagonal();
  pair.r = svd.v * root_s.asDiagonal();
  return pair;
}

FactorPair random_init(Rng& rng, int n1, int n2, int r, double scale) {
  if (r < 1) {
    throw std::invalid_argument("random_init: rank must be positive");
  }
  if (scale <= 0.0) {
    throw std::invalid_argument("random_init: scale must be positive");
  }
  FactorPair pair;
  pair.l = gauss_matrix(rng, n1, r, scale);
  pair.r = gauss_matrix(rng, n2, r, scale);
  return pair;
}

FactorPair apgd_l_step(const Problem& problem, const FactorPair& pair, double eta) {
  const Matrix gl = factor_grad_l(problem, pair);
  require_finite(gl, "apgd_l_step");
  FactorPair mid;
  mid.l = pair.l - eta * gl * gram_pinv(pair.r);
  mid.r = pair.r;
  return mid;
}

FactorPair apgd_r_step(const Problem& problem, const FactorPair& mid, double eta) {
  const Matrix gr = factor_grad_r(problem, mid);
  require_finite(gr, "apgd_r_step");
  FactorPair next;
  next.l = mid.l;
  next.r = mid.r - eta * gr * gram_pinv(mid.l);
  return next;
}

FactorPair apgd_step(const Problem& problem, const FactorPair& pair, double eta) {
  return apgd_r_step(problem, apgd_l_step(problem, pair, eta), eta);
}

FactorPair gd_step(const Problem& problem, const FactorPair& pair, double eta) {
  const Matrix g = problem.grad(pair.l * pair.r.transpose());
  require_finite(g, "gd_step");
  FactorPair next;
  next.l = pair.l - eta * g * pair.r;
  next.r = pair.r - eta * g.transpose() * pair.l;
  return next;
}

FactorPair scaled_gd_step(const Problem& problem, const FactorPair& pair, double eta,
                          double lambda) {
  if (lambda < 0.0) {
    throw std::invalid_argument("scaled_gd_step: lambda must be >= 0");
  }
  const Matrix g = problem.grad(pair.l * pair.r.transpose());
  require_finite(g, "scaled_gd_step");
  const Matrix gl = g * pair.r;
  const Matrix gr = g.transpose() * pair.l;
  FactorPair next;
  next.l = pair.l - eta * damped_gram_solve(pair.r, gl, lambda, "scaled_gd_step");
  next.r = pair.r - eta * damped_gram_solve(pair.l, gr, lambda, "scaled_gd_step");
  return next;
}

FactorPair precgd_step(const Problem& problem, const FactorPair& pair, double eta,
                       const GroundTruth& truth, double c_lambda) {
  const double err = (pair.l * pair.r.transpose() - truth.x_star).norm();
  if (!std::isfinite(err)) {
    throw std::runtime_error("precgd_step: non-finite iterate");
  }
  const double lambda = std::max(c_lambda * err, kPrecGdLambdaFloor);
  return scaled_gd_step(problem, pair, eta, lambda);
}

std::pair<FactorPair, double> noisyprecgd_state_step(const Problem& problem,
                                                     const FactorPair& pair, double eta,
                                                     double lambda, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("noisyprecgd_state_step: beta must lie in (0, 1)");
  }
  FactorPair next = scaled_gd_step(problem, pair, eta, lambda);
  return {std::move(next), beta * lambda};
}

namespace {

struct RecordContext {
  const Problem* problem;
  const GroundTruth* truth;
  const SensingProblem* sensing;  // non-null iff sensing problem with truth
  double truth_norm = 0.0;
  std::chrono::steady_clock::time_point start;
};

double cap_value(double v, bool& hit_cap) {
  if (!std::isfinite(v) || std::abs(v) > kDivergenceCap) {
    hit_cap = true;
    return kDivergenceCap;
  }
  return v;
}

TraceRecord make_record(const RecordContext& ctx, int iter, const FactorPair& pair,
                        bool& hit_cap) {
  TraceRecord rec;
  rec.iter = iter;
  const Matrix x = pair.l * pair.r.transpose();
  rec.loss = cap_value(ctx.problem->loss(x), hit_cap);
  if (ctx.truth != nullptr) {
    rec.rel_error = cap_value((x - ctx.truth->x_star).norm() / ctx.truth_norm, hit_cap);
  } else {
    rec.rel_error = quiet_nan();
  }
  if (ctx.sensing != nullptr) {
    rec.fc = cap_value(0.5 * ctx.sensing->apply(x - ctx.truth->x_star).squaredNorm(), hit_cap);
  } else {
    rec.fc = quiet_nan();
  }
  rec.grad_dual_norm_l = quiet_nan();
  rec.grad_dual_norm_r = quiet_nan();
  rec.wall_nanos = std::chrono::duration_cast<std::chrono::nanoseconds>(
                       std::chrono::steady_clock::now() - ctx.start)
                       .count();
  return rec;
}

TraceRecord capped_record(const RecordContext& ctx, int iter) {
  TraceRecord rec;
  rec.iter = iter;
  rec.loss = kDivergenceCap;
  rec.rel_error = ctx.truth != nullptr ? kDivergenceCap : quiet_nan();
  rec.fc = ctx.sensing != nullptr ? kDivergenceCap : quiet_nan();
  rec.grad_dual_norm_l = quiet_nan();
  rec.grad_dual_norm_r = quiet_nan();
  rec.wall_nanos = std::chrono::duration_cast<std::chrono::nanoseconds>(
                       std::chrono::steady_clock::now() - ctx.start)
                       .count();
  return rec;
}

void validate_run(const Problem& problem, const SolverRun& cfg) {
  if (cfg.rank < 1 || cfg.rank > std::min(problem.rows(), problem.cols())) {
    throw std::invalid_argument("run: cfg.rank out of range");
  }
  if (!(cfg.eta > 0.0)) {
    throw std::invalid_argument("run: eta must be positive");
  }
  if (cfg.max_iters < 0) {
    throw std::invalid_argument("run: max_iters must be >= 0");
  }
  if (cfg.lambda0 < 0.0) {
    throw std::invalid_argument("run: lambda0 must be >= 0");
  }
  if (cfg.algorithm == Algorithm::NoisyPrecGd && !(cfg.beta > 0.0 && cfg.beta < 1.0)) {
    throw std::invalid_argument("run: beta must lie in (0, 1)");
  }
  if (cfg.algorithm == Algorithm::PrecGd && !(cfg.prec_c_lambda > 0.0)) {
    throw std::invalid_argument("run: prec_c_lambda must be positive");
  }
}

}  // namespace

FactorPair initial_pair(const Problem& problem, const SolverRun& cfg) {
  switch (cfg.init) {
    case InitKind::Spectral:
      return spectral_init(problem, cfg.rank);
    case InitKind::RandomGaussian: {
      const double scale =
          cfg.init_scale > 0.0
              ? cfg.init_scale
              : 1.0 / std::sqrt(static_cast<double>(std::max(problem.rows(), problem.cols())));
      Rng rng(cfg.seed);
      return random_init(rng, problem.rows(), problem.cols(), cfg.rank, scale);
    }
    case InitKind::SmallRandom: {
      const double scale = cfg.init_scale > 0.0 ? cfg.init_scale : 1e-6;
      Rng rng(cfg.seed);
      return random_init(rng, problem.rows(), problem.cols(), cfg.rank, scale);
    }
  }
  throw std::invalid_argument("run: unknown init kind");
}

Trace run_observed(const Problem& problem, const GroundTruth* truth, const SolverRun& cfg,
                   FactorPair start, const StepObserver& observer) {
  validate_run(problem, cfg);
  if (start.l.rows() != problem.rows() || start.r.rows() != problem.cols() ||
      start.l.cols() != cfg.rank || start.r.cols() != cfg.rank) {
    throw std::invalid_argument("run: starting pair has wrong shape");
  }

  RecordContext ctx;
  ctx.problem = &problem;
  ctx.truth = truth;
  ctx.sensing = truth != nullptr ? dynamic_cast<const SensingProblem*>(&problem) : nullptr;
  if (truth != nullptr) {
    ctx.truth_norm = truth->x_star.norm();
    if (ctx.truth_norm == 0.0) {
      throw std::invalid_argument("run: ground truth has zero norm");
    }
  }
  ctx.start = std::chrono::steady_clock::now();

  Trace trace;
  trace.records.reserve(cfg.max_iters + 1);

  double lambda_state = 0.0;
  if (cfg.algorithm == Algorithm::NoisyPrecGd) {
    lambda_state = cfg.lambda0;
    if (lambda_state == 0.0) {
      const Matrix z = problem.init_surrogate();
      lambda_state = 1e-2 * thin_svd(z, 1).s[0];
    }
  }

  FactorPair pair = std::move(start);
  bool hit_cap = false;
  trace.records.push_back(make_record(ctx, 0, pair, hit_cap));
  if (hit_cap) {
    trace.diverged = true;
  }

  double prev_loss = trace.records.back().loss;
  for (int t = 1; t <= cfg.max_iters && !trace.diverged; ++t) {
    FactorPair next;
    try {
      switch (cfg.algorithm) {
        case Algorithm::Apgd: {
          FactorPair mid = apgd_l_step(problem, pair, cfg.eta);
          next = apgd_r_step(problem, mid, cfg.eta);
          if (observer) {
            observer(t, pair, mid, next);
          }
          break;
        }
        case Algorithm::Gd:
          next = gd_step(problem, pair, cfg.eta);
          break;
        case Algorithm::ScaledGd:
          next = scaled_gd_step(problem, pair, cfg.eta, 0.0);
          break;
        case Algorithm::ScaledGdLambda:
          next = scaled_gd_step(problem, pair, cfg.eta, cfg.lambda0);
          break;
        case Algorithm::PrecGd:
          if (truth == nullptr) {
            throw std::invalid_argument("run: PrecGd requires ground truth");
          }
          next = precgd_step(problem, pair, cfg.eta, *truth, cfg.prec_c_lambda);
          break;
        case Algorithm::NoisyPrecGd: {
          auto [stepped, new_lambda] =
              noisyprecgd_state_step(problem, pair, cfg.eta, lambda_state, cfg.beta);
          next = std::move(stepped);
          lambda_state = new_lambda;
          break;
        }
      }
    } catch (const std::invalid_argument&) {
      throw;  // configuration errors are real errors
    } catch (const std::exception&) {
      trace.diverged = true;
      trace.records.push_back(capped_record(ctx, t));
      break;
    }
    if (!next.l.allFinite() || !next.r.allFinite()) {
      trace.diverged = true;
      trace.records.push_back(capped_record(ctx, t));
      break;
    }
    pair = std::move(next);
    hit_cap = false;
    trace.records.push_back(make_record(ctx, t, pair, hit_cap));
    if (hit_cap) {
      trace.diverged = true;
      break;
    }
    const TraceRecord& rec = trace.records.back();
    if (cfg.stop_tol > 0.0) {
      const double denom = std::max(std::abs(prev_loss), 1e-300);
      const double rel_change = std::abs(rec.loss - prev_loss) / denom;
      const bool rel_error_small =
          truth != nullptr && std::isfinite(rec.rel_error) && rec.rel_error < cfg.stop_tol;
      if (rel_error_small || rel_change < cfg.stop_tol) {
        prev_loss = rec.loss;
        break;
      }
    }
    prev_loss = rec.loss;
  }

  trace.final_pair = std::move(pair);
  return trace;
}

Trace run_from(const Problem& problem, const GroundTruth* truth, const SolverRun& cfg,
               FactorPair start) {
  return run_observed(problem, truth, cfg, std::move(start), StepObserver());
}

Trace run(const Problem& problem, const GroundTruth* truth, const SolverRun& cfg) {
  validate_run(problem, cfg);
  return run_from(problem, truth, cfg, initial_pair(problem, cfg));
}

}  // namespace lowrank
