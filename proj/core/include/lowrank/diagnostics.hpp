#pragma once

#include <limits>
#include <vector>

#include "lowrank/numkit.hpp"
#include "lowrank/problems.hpp"
#include "lowrank/solvers.hpp"

namespace lowrank {

/// Constants from the factored-descent convergence analysis, evaluated
/// literally from their defining formulas.
struct TheoremConstants {
  double delta = 0.0;   // restricted-isometry constant at level 2r+1 (estimate)
  double rho = 0.0;     // relative init radius
  double tau = 0.0;     // gradient-dominance constant; 0 when non-contractive
  double eta_c = 0.0;   // per-iteration contraction increment
  double q_f = 1.0;     // loss contraction factor, 1 - eta_c
  double c_delta = 1.0; // (1 + delta) / (1 - delta)
  double c3 = 0.0;      // 1/tau + 7 (infinite when tau == 0)
  double e_opt = 0.0;   // noise floor c_e * nu^2 * r * n * ln(n) / m
  double q_g = 1.0;     // contraction factor for smooth strongly-convex losses
  double zeta = 0.0;    // ((c_rho-1) l_g + (c_rho+1) mu) / sqrt(2 l_g)
  double c_rho = 1.0;   // sqrt((1 - 3 rho^2) / (1 - rho^2))
  double l_g = 1.0;     // smoothness constant
  double mu = 1.0;      // strong-convexity constant
  // True when c_rho - sqrt(r + r_star) * delta > 0. False means the analysis
  // is non-contractive at these parameters; dominance checks become vacuous.
  bool tau_valid = false;
};

TheoremConstants compute_constants(double delta, double rho, double eta, int r, int r_star,
                                   double nu, int n, int m, double c_e, double l_g, double mu);

/// Scalars recorded around one alternating iteration: the clean loss before
/// the L update, after it, and after the R update, together with the dual
/// norms and principal angles the per-iteration inequalities are stated in.
struct IterWitness {
  int iter = 0;
  double fc_before = 0.0;
  double fc_mid = 0.0;
  double fc_after = 0.0;
  double grad_dual_l = 0.0;
  double grad_dual_r = 0.0;
  double noise_dual_l = 0.0;
  double noise_dual_r = 0.0;
  double cos_r = 1.0;
  double cos_l = 1.0;
};

/// One side of a per-iteration inequality check. `checked` is false when the
/// hypothesis gate was not met (the check is skipped, not failed); `ok` is
/// vacuously true in that case.
struct HalfCheck {
  bool checked = false;
  bool ok = true;
  double slack = std::numeric_limits<double>::quiet_NaN();
};

struct DescentReport {
  HalfCheck l;
  HalfCheck r;
  bool passed() const { return l.ok && r.ok; }
};

struct DominanceReport {
  HalfCheck l;
  HalfCheck r;
  bool passed() const { return l.ok && r.ok; }
};

struct ContractionReport {
  int checked = 0;
  bool ok = true;
  double max_ratio = 0.0;
};

struct CosAngles {
  double cos_r = 1.0;
  double cos_l = 1.0;
};

/// ||a * f * (f^T f)^{+1/2}||_F: the Frobenius norm of `a` pushed through the
/// factor and the inverse square root of its Gram matrix. Passing the
/// back-projected residual yields the preconditioned dual norm of the factor
/// gradient; passing the residual itself yields the cos-angle numerator.
double dual_grad_norm(const Matrix& a, const Matrix& factor);

/// Empirical restricted-isometry estimate: max over `trials` random
/// unit-Frobenius rank-`rank_level` matrices of |  ||A(M)||^2 - 1 |. A lower
/// bound on the true constant (a maximum over samples).
double estimate_rip(Rng& rng, const SensingProblem& problem, int rank_level, int trials);

/// Sufficient-decrease check for both half-steps:
/// fc_after_half <= fc_before_half - c2 * grad_dual^2 with
/// c2 = eta - (eta/3)(1 + 2 eta (1 + delta_hat)), gated per half on the
/// clean gradient dominating the noise term three-fold.
DescentReport check_descent_lemma(const IterWitness& witness, double eta, double delta_hat);

/// Gradient dominance check for both half-steps: grad_dual^2 >= tau * fc.
/// tau <= 0 makes both halves vacuous (non-contractive parameters, not an
/// error). Callers gate the whole sequence on the verified init radius
/// rho_hat <= 1/2 at t = 0.
DominanceReport check_grad_dominance(const IterWitness& witness, double tau);

/// Principal-angle cosines between the residual and the factor row/column
/// spaces: cos_r at (l, r) before the L update, cos_l at (l', r) after it.
/// Zero residual returns 1 by convention (the ratio is 0/0 at the optimum).
CosAngles cos_angles(const FactorPair& before_l_update, const FactorPair& after_l_update,
                     const Matrix& x_star);

/// Checks g_t - g_star <= q_g * (g_{t-1} - g_star) along a trace of loss
/// values, stopping once the gap falls below 1e-24 of the initial gap.
ContractionReport check_general_contraction(const std::vector<double>& g_values, double q_g,
                                            double g_star);

/// Central-difference gradient oracle: (g(x + h e_ij) - g(x - h e_ij)) / 2h
/// per entry.
Matrix finite_diff_grad(const Problem& problem, const Matrix& x, double h = 1e-5);

/// ||x - x_star||_F / ||x_star||_F. Zero-norm truth is a domain error.
double rel_error(const Matrix& x, const Matrix& x_star);

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Matrix& recon, const Matrix& reference, double peak);

/// Measured init radius ||l r^T - x_star||_F / sigma_min(x_star); the
/// per-iteration lemma checks assume rho_hat <= 1/2 at t = 0.
double rho_hat(const FactorPair& pair, const GroundTruth& truth);

/// Records an IterWitness per alternating iteration of an observed solver
/// run. Only meaningful for sensing problems where the noise realization is
/// recoverable (s = y - A(x_star)); the clean loss fc and its gradient are
/// formed by re-projecting the residual against the ground truth.
class WitnessCollector {
 public:
  WitnessCollector(const SensingProblem& problem, const GroundTruth& truth);

  /// Observer to pass to run_observed; fills witnesses() as the run advances.
  StepObserver observer();

  const std::vector<IterWitness>& witnesses() const { return witnesses_; }

 private:
  const SensingProblem& problem_;
  const GroundTruth& truth_;
  Matrix noise_backproj_;  // A*(s), fixed over the run
  std::vector<IterWitness> witnesses_;
};

}  // namespace lowrank
