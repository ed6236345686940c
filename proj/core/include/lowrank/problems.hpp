#pragma once

#include "lowrank/numkit.hpp"

#include <vector>

namespace lowrank {

/// A planted low-rank target with unit smallest nonzero singular value and
/// condition number kappa.
struct GroundTruth {
  Matrix x_star;     // n1 x n2, rank r_star
  int r_star = 0;
  double kappa = 1.0;
  double sigma_min = 1.0;  // sigma_{r_star}(x_star); 1 by construction
};

/// X* = U Sigma V^T with U, V orthonormal factors of Gaussian draws and Sigma
/// from condition_spectrum (geometric, sigma_{r_star} = 1).
GroundTruth make_ground_truth(Rng& rng, int n1, int n2, int r_star, double kappa);

/// Measurement model interface: loss g(X) and its Euclidean gradient at
/// X = L R^T, plus the observation-derived matrix whose leading rank-r part
/// seeds spectral initialization. Implementations are immutable after
/// construction; loss/grad are pure and safe to call concurrently.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual int rows() const = 0;
  virtual int cols() const = 0;
  virtual const char* kind() const = 0;

  virtual double loss(const Matrix& x) const = 0;
  virtual Matrix grad(const Matrix& x) const = 0;

  /// Matrix whose best rank-r approximation initializes the factors.
  virtual Matrix init_surrogate() const = 0;

 protected:
  void check_dims(const Matrix& x) const;
};

/// Linear measurements y_i = <A_i, X*> + s_i; g(X) = 1/2 ||A(X) - y||^2.
class SensingProblem final : public Problem {
 public:
  SensingProblem(std::vector<Matrix> a_mats, Vector y, double noise_sigma);

  int rows() const override { return n1_; }
  int cols() const override { return n2_; }
  const char* kind() const override { return "sensing"; }

  double loss(const Matrix& x) const override;
  Matrix grad(const Matrix& x) const override;
  Matrix init_surrogate() const override;  // adjoint_apply(y)

  /// The measurement operator A(X): m inner products <A_i, X>.
  Vector apply(const Matrix& x) const;
  /// The adjoint A*(v) = sum_i v_i A_i.
  Matrix adjoint_apply(const Vector& v) const;

  int m() const { return static_cast<int>(a_mats_.size()); }
  const std::vector<Matrix>& a_mats() const { return a_mats_; }
  const Vector& y() const { return y_; }
  double noise_sigma() const { return noise_sigma_; }

 private:
  std::vector<Matrix> a_mats_;
  Vector y_;
  double noise_sigma_;
  int n1_, n2_;
};

/// A_i entries N(0, 1/m); y = A(X*) + s with s_i ~ N(0, nu^2).
SensingProblem make_sensing(Rng& rng, const GroundTruth& truth, int m, double nu);

/// g(X) = 1/2 ||W .* (X - X*)||_F^2 with a known strictly positive weight
/// matrix; restricted-smoothness/convexity constants are max W^2 and min W^2.
class WeightedPcaProblem final : public Problem {
 public:
  WeightedPcaProblem(Matrix w, Matrix x_star);

  int rows() const override { return static_cast<int>(w_.rows()); }
  int cols() const override { return static_cast<int>(w_.cols()); }
  const char* kind() const override { return "wpca"; }

  double loss(const Matrix& x) const override;
  Matrix grad(const Matrix& x) const override;
  Matrix init_surrogate() const override;  // X* (weights are known, observation debiases exactly)

  double l_g() const { return l_g_; }  // max W_ij^2
  double mu() const { return mu_; }    // min W_ij^2
  const Matrix& w() const { return w_; }
  const Matrix& x_star() const { return x_star_; }

 private:
  Matrix w_;
  Matrix x_star_;
  double l_g_, mu_;
};

/// W uniform on [1, sqrt(weight_ratio)] with one entry pinned to each endpoint
/// so that max W^2 / min W^2 equals weight_ratio exactly.
WeightedPcaProblem make_weighted_pca(Rng& rng, const GroundTruth& truth, double weight_ratio);

/// Logistic observation model: g(X) = sum_ij softplus(X_ij) - alpha_ij X_ij,
/// evaluated in the overflow-safe form max(x,0) + log1p(exp(-|x|)).
class OneBitProblem final : public Problem {
 public:
  explicit OneBitProblem(Matrix alpha);

  int rows() const override { return static_cast<int>(alpha_.rows()); }
  int cols() const override { return static_cast<int>(alpha_.cols()); }
  const char* kind() const override { return "onebit"; }

  double loss(const Matrix& x) const override;
  Matrix grad(const Matrix& x) const override;  // sigmoid(X) - alpha
  Matrix init_surrogate() const override;       // logit(alpha), clamped

  const Matrix& alpha() const { return alpha_; }

 private:
  Matrix alpha_;
};

/// alpha = sigmoid(X*) entrywise (the large-sample observation rate).
OneBitProblem make_one_bit(const GroundTruth& truth);

/// g(X) = 1/(2p) ||P_Omega(X - M)||_F^2 over a Bernoulli(p) mask, with
/// m_obs = P_Omega(X* + S) the masked noisy observation.
class CompletionProblem final : public Problem {
 public:
  CompletionProblem(Matrix omega_mask, Matrix m_obs, double p);

  int rows() const override { return static_cast<int>(mask_.rows()); }
  int cols() const override { return static_cast<int>(mask_.cols()); }
  const char* kind() const override { return "completion"; }

  double loss(const Matrix& x) const override;
  Matrix grad(const Matrix& x) const override;
  Matrix init_surrogate() const override;  // m_obs / p (inverse-propensity debiasing)

  const Matrix& omega_mask() const { return mask_; }
  const Matrix& m_obs() const { return m_obs_; }
  double p() const { return p_; }

 private:
  Matrix mask_;
  Matrix m_obs_;
  double p_;
};

/// Gaussian noise N(0, nu^2) added to every entry, then masked by a
/// Bernoulli(p) pattern.
CompletionProblem make_completion(Rng& rng, const GroundTruth& truth, double p, double nu);

}  // namespace lowrank
