#include "lowrank/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace lowrank {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Matrix orthonormal_columns(Rng& rng, int n, int r) {
  Matrix g = gauss_matrix(rng, n, r);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, r);
  return q;
}

}  // namespace

void Problem::check_dims(const Matrix& x) const {
  if (x.rows() != rows() || x.cols() != cols()) {
    throw std::invalid_argument(std::string(kind()) + ": X has shape " +
                                std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                                ", expected " + std::to_string(rows()) + "x" +
                                std::to_string(cols()));
  }
}

GroundTruth make_ground_truth(Rng& rng, int n1, int n2, int r_star, double kappa) {
  if (n1 < 1 || n2 < 1) {
    throw std::invalid_argument("make_ground_truth: dimensions must be positive");
  }
  if (r_star < 1 || r_star > std::min(n1, n2)) {
    throw std::invalid_argument("make_ground_truth: need 1 <= r_star <= min(n1, n2)");
  }
  const std::vector<double> sigma = condition_spectrum(r_star, kappa);
  Matrix u = orthonormal_columns(rng, n1, r_star);
  Matrix v = orthonormal_columns(rng, n2, r_star);
  Vector s = Eigen::Map<const Vector>(sigma.data(), r_star);
  GroundTruth truth;
  truth.x_star = u * s.asDiagonal() * v.transpose();
  truth.r_star = r_star;
  truth.kappa = kappa;
  truth.sigma_min = 1.0;
  return truth;
}

// ---------------------------------------------------------------------------
// SensingProblem

SensingProblem::SensingProblem(std::vector<Matrix> a_mats, Vector y, double noise_sigma)
    : a_mats_(std::move(a_mats)), y_(std::move(y)), noise_sigma_(noise_sigma) {
  if (a_mats_.empty()) {
    throw std::invalid_argument("SensingProblem: need at least one measurement");
  }
  if (static_cast<Eigen::Index>(a_mats_.size()) != y_.size()) {
    throw std::invalid_argument("SensingProblem: |a_mats| != |y|");
  }
  n1_ = static_cast<int>(a_mats_.front().rows());
  n2_ = static_cast<int>(a_mats_.front().cols());
  for (const Matrix& a : a_mats_) {
    if (a.rows() != n1_ || a.cols() != n2_) {
      throw std::invalid_argument("SensingProblem: inconsistent measurement shapes");
    }
  }
}

Vector SensingProblem::apply(const Matrix& x) const {
  check_dims(x);
  Vector out(y_.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = a_mats_[i].cwiseProduct(x).sum();
  }
  return out;
}

Matrix SensingProblem::adjoint_apply(const Vector& v) const {
  if (v.size() != y_.size()) {
    throw std::invalid_argument("adjoint_apply: vector length != m");
  }
  Matrix out = Matrix::Zero(n1_, n2_);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.noalias() += v[i] * a_mats_[i];
  }
  return out;
}

double SensingProblem::loss(const Matrix& x) const {
  return 0.5 * (apply(x) - y_).squaredNorm();
}

Matrix SensingProblem::grad(const Matrix& x) const {
  return adjoint_apply(apply(x) - y_);
}

Matrix SensingProblem::init_surrogate() const {
  return adjoint_apply(y_);
}

SensingProblem make_sensing(Rng& rng, const GroundTruth& truth, int m, double nu) {
  if (m < 1) {
    throw std::invalid_argument("make_sensing: m must be >= 1");
  }
  if (nu < 0.0) {
    throw std::invalid_argument("make_sensing: nu must be >= 0");
  }
  const int n1 = static_cast<int>(truth.x_star.rows());
  const int n2 = static_cast<int>(truth.x_star.cols());
  const double stddev = 1.0 / std::sqrt(static_cast<double>(m));
  std::vector<Matrix> a_mats;
  a_mats.reserve(m);
  for (int i = 0; i < m; ++i) {
    a_mats.push_back(gauss_matrix(rng, n1, n2, stddev));
  }
  Vector y(m);
  for (int i = 0; i < m; ++i) {
    y[i] = a_mats[i].cwiseProduct(truth.x_star).sum();
  }
  for (int i = 0; i < m; ++i) {
    y[i] += nu * rng.normal();
  }
  return SensingProblem(std::move(a_mats), std::move(y), nu);
}

// ---------------------------------------------------------------------------
// WeightedPcaProblem

WeightedPcaProblem::WeightedPcaProblem(Matrix w, Matrix x_star)
    : w_(std::move(w)), x_star_(std::move(x_star)) {
  if (w_.rows() != x_star_.rows() || w_.cols() != x_star_.cols()) {
    throw std::invalid_argument("WeightedPcaProblem: W and X* shapes differ");
  }
  if ((w_.array() <= 0.0).any()) {
    throw std::invalid_argument("WeightedPcaProblem: weights must be strictly positive");
  }
  const double w_max = w_.maxCoeff();
  const double w_min = w_.minCoeff();
  l_g_ = w_max * w_max;
  mu_ = w_min * w_min;
}

double WeightedPcaProblem::loss(const Matrix& x) const {
  check_dims(x);
  return 0.5 * (w_.array() * (x - x_star_).array()).matrix().squaredNorm();
}

Matrix WeightedPcaProblem::grad(const Matrix& x) const {
  check_dims(x);
  return (w_.array().square() * (x - x_star_).array()).matrix();
}

Matrix WeightedPcaProblem::init_surrogate() const {
  return x_star_;
}

WeightedPcaProblem make_weighted_pca(Rng& rng, const GroundTruth& truth, double weight_ratio) {
  if (weight_ratio < 1.0) {
    throw std::invalid_argument("make_weighted_pca: weight_ratio must be >= 1");
  }
  const int n1 = static_cast<int>(truth.x_star.rows());
  const int n2 = static_cast<int>(truth.x_star.cols());
  Matrix w(n1, n2);
  const double hi = std::sqrt(weight_ratio);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      w(i, j) = 1.0 + (hi - 1.0) * rng.uniform();
    }
  }
  // Pin one entry to each endpoint so max W^2 / min W^2 is attained exactly.
  w(0, 0) = 1.0;
  if (n1 * n2 > 1) {
    w(n1 - 1, n2 - 1) = hi;
  } else if (weight_ratio != 1.0) {
    throw std::invalid_argument("make_weighted_pca: 1x1 problem cannot realize ratio > 1");
  }
  return WeightedPcaProblem(std::move(w), truth.x_star);
}

// ---------------------------------------------------------------------------
// OneBitProblem

OneBitProblem::OneBitProblem(Matrix alpha) : alpha_(std::move(alpha)) {
  if (alpha_.size() == 0) {
    throw std::invalid_argument("OneBitProblem: empty observation");
  }
  if ((alpha_.array() < 0.0).any() || (alpha_.array() > 1.0).any()) {
    throw std::invalid_argument("OneBitProblem: alpha entries must lie in [0, 1]");
  }
}

double OneBitProblem::loss(const Matrix& x) const {
  check_dims(x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      total += softplus(x(i, j)) - alpha_(i, j) * x(i, j);
    }
  }
  return total;
}

Matrix OneBitProblem::grad(const Matrix& x) const {
  check_dims(x);
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out(i, j) = sigmoid(x(i, j)) - alpha_(i, j);
    }
  }
  return out;
}

Matrix OneBitProblem::init_surrogate() const {
  // logit recovers X from alpha = sigmoid(X); clamp away from {0,1} so the
  // surrogate stays finite when alpha saturates.
  constexpr double kEps = 1e-12;
  Matrix out(alpha_.rows(), alpha_.cols());
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double a = std::min(1.0 - kEps, std::max(kEps, alpha_(i, j)));
      out(i, j) = std::log(a / (1.0 - a));
    }
  }
  return out;
}

OneBitProblem make_one_bit(const GroundTruth& truth) {
  Matrix alpha(truth.x_star.rows(), truth.x_star.cols());
  for (Eigen::Index i = 0; i < alpha.rows(); ++i) {
    for (Eigen::Index j = 0; j < alpha.cols(); ++j) {
      alpha(i, j) = sigmoid(truth.x_star(i, j));
    }
  }
  return OneBitProblem(std::move(alpha));
}

// ---------------------------------------------------------------------------
// CompletionProblem

CompletionProblem::CompletionProblem(Matrix omega_mask, Matrix m_obs, double p)
    : mask_(std::move(omega_mask)), m_obs_(std::move(m_obs)), p_(p) {
  if (mask_.rows() != m_obs_.rows() || mask_.cols() != m_obs_.cols()) {
    throw std::invalid_argument("CompletionProblem: mask and observation shapes differ");
  }
  if (!(p_ > 0.0 && p_ <= 1.0)) {
    throw std::invalid_argument("CompletionProblem: p must lie in (0, 1]");
  }
  for (Eigen::Index i = 0; i < mask_.rows(); ++i) {
    for (Eigen::Index j = 0; j < mask_.cols(); ++j) {
      const double v = mask_(i, j);
      if (v != 0.0 && v != 1.0) {
        throw std::invalid_argument("CompletionProblem: mask entries must be 0 or 1");
      }
      if (v == 0.0 && m_obs_(i, j) != 0.0) {
        throw std::invalid_argument("CompletionProblem: observation nonzero off the mask");
      }
    }
  }
}

double CompletionProblem::loss(const Matrix& x) const {
  check_dims(x);
  const Matrix masked = mask_.cwiseProduct(x - m_obs_);
  return masked.squaredNorm() / (2.0 * p_);
}

Matrix CompletionProblem::grad(const Matrix& x) const {
  check_dims(x);
  return mask_.cwiseProduct(x - m_obs_) / p_;
}

Matrix CompletionProblem::init_surrogate() const {
  return m_obs_ / p_;
}

CompletionProblem make_completion(Rng& rng, const GroundTruth& truth, double p, double nu) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw std::invalid_argument("make_completion: p must lie in (0, 1]");
  }
  if (nu < 0.0) {
    throw std::invalid_argument("make_completion: nu must be >= 0");
  }
  const int n1 = static_cast<int>(truth.x_star.rows());
  const int n2 = static_cast<int>(truth.x_star.cols());
  Matrix noisy = truth.x_star + gauss_matrix(rng, n1, n2, nu);
  Matrix mask(n1, n2);
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      mask(i, j) = rng.uniform() < p ? 1.0 : 0.0;
    }
  }
  return CompletionProblem(mask, mask.cwiseProduct(noisy), p);
}

}  // namespace lowrank
