#include "lowrank/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace lowrank {

namespace {

// Relative slack floor for the per-iteration inequality checks: roundoff in
// the witness scalars, not a behavioral tolerance.
double check_tol(double scale) { return 1e-12 * std::max(1.0, scale); }

}  // namespace

TheoremConstants compute_constants(double delta, double rho, double eta, int r, int r_star,
                                   double nu, int n, int m, double c_e, double l_g, double mu) {
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw std::domain_error("compute_constants: delta must lie in [0, 1)");
  }
  if (!(rho * rho < 1.0 / 3.0)) {
    throw std::domain_error("compute_constants: rho^2 must be < 1/3");
  }
  if (rho < 0.0) {
    throw std::invalid_argument("compute_constants: rho must be >= 0");
  }
  if (!(eta > 0.0)) {
    throw std::invalid_argument("compute_constants: eta must be positive");
  }
  if (r_star < 1 || r < r_star) {
    throw std::invalid_argument("compute_constants: need r >= r_star >= 1");
  }
  if (n < 2 || m < 1) {
    throw std::invalid_argument("compute_constants: need n >= 2 and m >= 1");
  }
  if (nu < 0.0 || !(c_e > 0.0)) {
    throw std::invalid_argument("compute_constants: need nu >= 0 and c_e > 0");
  }
  if (!(mu > 0.0) || l_g < mu) {
    throw std::invalid_argument("compute_constants: need l_g >= mu > 0");
  }

  TheoremConstants c;
  c.delta = delta;
  c.rho = rho;
  c.l_g = l_g;
  c.mu = mu;
  c.c_rho = std::sqrt((1.0 - 3.0 * rho * rho) / (1.0 - rho * rho));

  const double base = c.c_rho - std::sqrt(static_cast<double>(r + r_star)) * delta;
  c.tau_valid = base > 0.0;
  c.tau = c.tau_valid ? base * base : 0.0;
  c.eta_c = c.tau * (eta - (eta / 3.0) * (1.0 + 2.0 * eta * (1.0 + delta)));
  c.q_f = 1.0 - c.eta_c;
  c.c_delta = (1.0 + delta) / (1.0 - delta);
  c.c3 = c.tau > 0.0 ? 1.0 / c.tau + 7.0 : std::numeric_limits<double>::infinity();
  c.e_opt = c_e * nu * nu * static_cast<double>(r) * static_cast<double>(n) *
            std::log(static_cast<double>(n)) / static_cast<double>(m);

  c.zeta = ((c.c_rho - 1.0) * l_g + (c.c_rho + 1.0) * mu) / std::sqrt(2.0 * l_g);
  const double inner = 1.0 - eta * (1.0 - l_g * eta / 2.0) * c.zeta * c.zeta;
  c.q_g = inner * inner;
  return c;
}

double dual_grad_norm(const Matrix& a, const Matrix& factor) {
  if (a.cols() != factor.rows()) {
    throw std::invalid_argument("dual_grad_norm: inner dimensions do not match");
  }
  return (a * factor * gram_pinv_sqrt(factor)).norm();
}

double estimate_rip(Rng& rng, const SensingProblem& problem, int rank_level, int trials) {
  if (rank_level < 1) {
    throw std::invalid_argument("estimate_rip: rank_level must be positive");
  }
  if (trials < 1) {
    throw std::invalid_argument("estimate_rip: trials must be positive");
  }
  const int level = std::min<int>(rank_level, std::min(problem.rows(), problem.cols()));
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Matrix g1 = gauss_matrix(rng, problem.rows(), level);
    const Matrix g2 = gauss_matrix(rng, problem.cols(), level);
    Matrix m = g1 * g2.transpose();
    const double norm = m.norm();
    if (norm == 0.0) {
      continue;  // measure-zero draw; skip rather than divide by zero
    }
    m /= norm;
    worst = std::max(worst, std::abs(problem.apply(m).squaredNorm() - 1.0));
  }
  return worst;
}

DescentReport check_descent_lemma(const IterWitness& witness, double eta, double delta_hat) {
  if (!(eta > 0.0)) {
    throw std::invalid_argument("check_descent_lemma: eta must be positive");
  }
  if (!(delta_hat >= 0.0)) {
    throw std::invalid_argument("check_descent_lemma: delta_hat must be >= 0");
  }
  const double c2 = eta - (eta / 3.0) * (1.0 + 2.0 * eta * (1.0 + delta_hat));

  DescentReport report;
  if (witness.grad_dual_l >= 3.0 * witness.noise_dual_l) {
    report.l.checked = true;
    report.l.slack =
        witness.fc_before - c2 * witness.grad_dual_l * witness.grad_dual_l - witness.fc_mid;
    report.l.ok = report.l.slack >= -check_tol(witness.fc_before);
  }
  if (witness.grad_dual_r >= 3.0 * witness.noise_dual_r) {
    report.r.checked = true;
    report.r.slack =
        witness.fc_mid - c2 * witness.grad_dual_r * witness.grad_dual_r - witness.fc_after;
    report.r.ok = report.r.slack >= -check_tol(witness.fc_mid);
  }
  return report;
}

DominanceReport check_grad_dominance(const IterWitness& witness, double tau) {
  DominanceReport report;
  if (!(tau > 0.0)) {
    return report;  // non-contractive parameters: vacuous, not an error
  }
  report.l.checked = true;
  report.l.slack = witness.grad_dual_l * witness.grad_dual_l - tau * witness.fc_before;
  report.l.ok = report.l.slack >= -check_tol(witness.fc_before);
  report.r.checked = true;
  report.r.slack = witness.grad_dual_r * witness.grad_dual_r - tau * witness.fc_mid;
  report.r.ok = report.r.slack >= -check_tol(witness.fc_mid);
  return report;
}

CosAngles cos_angles(const FactorPair& before_l_update, const FactorPair& after_l_update,
                     const Matrix& x_star) {
  CosAngles out;
  const Matrix e_before = before_l_update.l * before_l_update.r.transpose() - x_star;
  const double n_before = e_before.norm();
  if (n_before > 0.0) {
    out.cos_r = dual_grad_norm(e_before, before_l_update.r) / n_before;
  }
  const Matrix e_mid = after_l_update.l * after_l_update.r.transpose() - x_star;
  const double n_mid = e_mid.norm();
  if (n_mid > 0.0) {
    out.cos_l = dual_grad_norm(e_mid.transpose(), after_l_update.l) / n_mid;
  }
  return out;
}

ContractionReport check_general_contraction(const std::vector<double>& g_values, double q_g,
                                            double g_star) {
  if (!(q_g > 0.0)) {
    throw std::invalid_argument("check_general_contraction: q_g must be positive");
  }
  ContractionReport report;
  if (g_values.size() < 2) {
    return report;
  }
  const double gap0 = g_values.front() - g_star;
  const double floor = 1e-24 * std::max(gap0, 0.0);
  for (std::size_t t = 1; t < g_values.size(); ++t) {
    const double prev_gap = g_values[t - 1] - g_star;
    if (!(prev_gap > floor)) {
      break;  // gap at the numerical floor: ratios are roundoff noise
    }
    const double gap = g_values[t] - g_star;
    ++report.checked;
    report.max_ratio = std::max(report.max_ratio, gap / prev_gap);
    if (gap > q_g * prev_gap) {
      report.ok = false;
    }
  }
  return report;
}

Matrix finite_diff_grad(const Problem& problem, const Matrix& x, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("finite_diff_grad: h must be positive");
  }
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = problem.loss(probe);
      probe(i, j) = orig - h;
      const double down = problem.loss(probe);
      probe(i, j) = orig;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

double rel_error(const Matrix& x, const Matrix& x_star) {
  if (x.rows() != x_star.rows() || x.cols() != x_star.cols()) {
    throw std::invalid_argument("rel_error: dimension mismatch");
  }
  const double denom = x_star.norm();
  if (denom == 0.0) {
    throw std::domain_error("rel_error: reference has zero norm");
  }
  return (x - x_star).norm() / denom;
}

double psnr(const Matrix& recon, const Matrix& reference, double peak) {
  if (recon.rows() != reference.rows() || recon.cols() != reference.cols()) {
    throw std::invalid_argument("psnr: dimension mismatch");
  }
  if (!(peak > 0.0)) {
    throw std::invalid_argument("psnr: peak must be positive");
  }
  const double mse =
      (recon - reference).squaredNorm() / static_cast<double>(recon.rows() * recon.cols());
  if (mse == 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return 10.0 * std::log10(peak * peak / mse);
}

double rho_hat(const FactorPair& pair, const GroundTruth& truth) {
  if (!(truth.sigma_min > 0.0)) {
    throw std::invalid_argument("rho_hat: truth.sigma_min must be positive");
  }
  return (pair.l * pair.r.transpose() - truth.x_star).norm() / truth.sigma_min;
}

WitnessCollector::WitnessCollector(const SensingProblem& problem, const GroundTruth& truth)
    : problem_(problem), truth_(truth) {
  if (problem.rows() != truth.x_star.rows() || problem.cols() != truth.x_star.cols()) {
    throw std::invalid_argument("WitnessCollector: problem/truth dimension mismatch");
  }
  const Vector s = problem.y() - problem.apply(truth.x_star);
  noise_backproj_ = problem.adjoint_apply(s);
}

StepObserver WitnessCollector::observer() {
  return [this](int iter, const FactorPair& before, const FactorPair& mid,
                const FactorPair& after) {
    IterWitness w;
    w.iter = iter;

    const Matrix e_before = before.l * before.r.transpose() - truth_.x_star;
    const Vector r_before = problem_.apply(e_before);
    w.fc_before = 0.5 * r_before.squaredNorm();
    const Matrix back_before = problem_.adjoint_apply(r_before);
    w.grad_dual_l = dual_grad_norm(back_before, before.r);
    w.noise_dual_l = dual_grad_norm(noise_backproj_, before.r);
    const double n_before = e_before.norm();
    w.cos_r = n_before > 0.0 ? dual_grad_norm(e_before, before.r) / n_before : 1.0;

    const Matrix e_mid = mid.l * mid.r.transpose() - truth_.x_star;
    const Vector r_mid = problem_.apply(e_mid);
    w.fc_mid = 0.5 * r_mid.squaredNorm();
    const Matrix back_mid = problem_.adjoint_apply(r_mid);
    w.grad_dual_r = dual_grad_norm(back_mid.transpose(), mid.l);
    w.noise_dual_r = dual_grad_norm(noise_backproj_.transpose(), mid.l);
    const double n_mid = e_mid.norm();
    w.cos_l = n_mid > 0.0 ? dual_grad_norm(e_mid.transpose(), mid.l) / n_mid : 1.0;

    const Matrix e_after = after.l * after.r.transpose() - truth_.x_star;
    w.fc_after = 0.5 * problem_.apply(e_after).squaredNorm();

    witnesses_.push_back(w);
  };
}

}  // namespace lowrank
