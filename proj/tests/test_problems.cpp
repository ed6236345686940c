#include "lowrank/problems.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "lowrank/numkit.hpp"

namespace lowrank {
namespace {

// Local central-difference oracle, independent of the library's version.
Matrix fd_grad(const Problem& problem, const Matrix& x, double h) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      probe(i, j) = x(i, j) + h;
      const double up = problem.loss(probe);
      probe(i, j) = x(i, j) - h;
      const double down = problem.loss(probe);
      probe(i, j) = x(i, j);
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

void expect_grad_matches_fd(const Problem& problem, const Matrix& x) {
  const Matrix g = problem.grad(x);
  const Matrix fd = fd_grad(problem, x, 1e-5);
  EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1e-12, g.norm()));
}

GroundTruth zero_truth(int n1, int n2) {
  GroundTruth truth;
  truth.x_star = Matrix::Zero(n1, n2);
  truth.r_star = 1;
  truth.kappa = 1.0;
  truth.sigma_min = 1.0;
  return truth;
}

TEST(GroundTruthGen, RankOneUnitSpectrum) {
  Rng rng(3);
  const GroundTruth truth = make_ground_truth(rng, 8, 6, 1, 1.0);
  const ThinSvd svd = thin_svd(truth.x_star, 2);
  EXPECT_NEAR(svd.s[0], 1.0, 1e-10);
  EXPECT_LE(svd.s[1], 1e-10);
  EXPECT_EQ(truth.r_star, 1);
  EXPECT_EQ(truth.sigma_min, 1.0);
}

TEST(GroundTruthGen, SvdOracleConditionNumber) {
  Rng rng(17);
  const GroundTruth truth = make_ground_truth(rng, 20, 20, 5, 100.0);
  const ThinSvd svd = thin_svd(truth.x_star, 6);
  EXPECT_NEAR(svd.s[0] / svd.s[4], 100.0, 1e-8 * 100.0);
  EXPECT_LE(svd.s[5] / svd.s[0], 1e-10);
  EXPECT_NEAR(svd.s[4], 1.0, 1e-10);  // smallest nonzero normalized to 1
  EXPECT_EQ(truth.kappa, 100.0);
}

TEST(GroundTruthGen, Determinism) {
  Rng a(99);
  Rng b(99);
  const GroundTruth ta = make_ground_truth(a, 10, 7, 3, 10.0);
  const GroundTruth tb = make_ground_truth(b, 10, 7, 3, 10.0);
  EXPECT_TRUE(ta.x_star == tb.x_star);
}

TEST(GroundTruthGen, RejectsBadArguments) {
  Rng rng(1);
  EXPECT_THROW(make_ground_truth(rng, 4, 4, 5, 1.0), std::invalid_argument);
  EXPECT_THROW(make_ground_truth(rng, 4, 4, 2, 0.5), std::invalid_argument);
}

TEST(Sensing, ZeroTruthGivesZeroObservations) {
  Rng rng(5);
  const GroundTruth truth = zero_truth(5, 4);
  const SensingProblem problem = make_sensing(rng, truth, 12, 0.0);
  EXPECT_EQ(problem.y().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sensing, NoiselessObservationsMatchDirectInnerProducts) {
  Rng rng(7);
  const GroundTruth truth = make_ground_truth(rng, 6, 5, 2, 3.0);
  const SensingProblem problem = make_sensing(rng, truth, 30, 0.0);
  for (int i = 0; i < problem.m(); ++i) {
    double dot = 0.0;
    for (Eigen::Index a = 0; a < 6; ++a) {
      for (Eigen::Index b = 0; b < 5; ++b) {
        dot += problem.a_mats()[i](a, b) * truth.x_star(a, b);
      }
    }
    ASSERT_NEAR(problem.y()[i], dot, 1e-12 * std::max(1.0, std::abs(dot)));
  }
}

TEST(Sensing, AdjointIdentity) {
  Rng rng(21);
  const GroundTruth truth = make_ground_truth(rng, 7, 6, 2, 2.0);
  const SensingProblem problem = make_sensing(rng, truth, 25, 0.1);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix x = gauss_matrix(rng, 7, 6, 1.0);
    Vector v(25);
    for (int i = 0; i < 25; ++i) {
      v[i] = rng.normal();
    }
    const double lhs = (problem.adjoint_apply(v).array() * x.array()).sum();
    const double rhs = v.dot(problem.apply(x));
    ASSERT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(rhs)));
  }
}

TEST(Sensing, AdjointOfBasisVectorIsMeasurementMatrix) {
  Rng rng(33);
  const GroundTruth truth = make_ground_truth(rng, 4, 4, 1, 1.0);
  const SensingProblem problem = make_sensing(rng, truth, 6, 0.0);
  Vector e1 = Vector::Zero(6);
  e1[0] = 1.0;
  EXPECT_TRUE(problem.adjoint_apply(e1) == problem.a_mats()[0]);
  EXPECT_EQ(problem.adjoint_apply(Vector::Zero(6)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Sensing, OperatorNormalizationNearIsometry) {
  Rng rng(101);
  const GroundTruth truth = make_ground_truth(rng, 8, 8, 2, 1.0);
  Matrix x = gauss_matrix(rng, 8, 8, 1.0);
  x /= x.norm();
  double mean = 0.0;
  const int draws = 50;
  for (int d = 0; d < draws; ++d) {
    const SensingProblem problem = make_sensing(rng, truth, 200, 0.0);
    mean += problem.apply(x).squaredNorm();
  }
  mean /= draws;
  EXPECT_NEAR(mean, 1.0, 0.15);
}

TEST(Sensing, LossZeroAtTruthWhenNoiseless) {
  Rng rng(13);
  const GroundTruth truth = make_ground_truth(rng, 6, 6, 2, 5.0);
  const SensingProblem problem = make_sensing(rng, truth, 40, 0.0);
  EXPECT_LE(problem.loss(truth.x_star), 1e-20);
  EXPECT_TRUE(problem.init_surrogate() == problem.adjoint_apply(problem.y()));
}

TEST(Sensing, ValidationErrors) {
  Rng rng(2);
  const GroundTruth truth = make_ground_truth(rng, 4, 4, 1, 1.0);
  const SensingProblem problem = make_sensing(rng, truth, 5, 0.0);
  EXPECT_THROW(problem.adjoint_apply(Vector::Zero(4)), std::invalid_argument);
  EXPECT_THROW(problem.loss(Matrix::Zero(3, 4)), std::invalid_argument);
  EXPECT_THROW(problem.grad(Matrix::Zero(4, 5)), std::invalid_argument);
  EXPECT_THROW(make_sensing(rng, truth, 0, 0.0), std::invalid_argument);
  EXPECT_THROW(make_sensing(rng, truth, 5, -1.0), std::invalid_argument);
}

TEST(WeightedPca, LossMatchesDirectSum) {
  Rng rng(8);
  const GroundTruth truth = make_ground_truth(rng, 6, 5, 2, 4.0);
  const WeightedPcaProblem problem = make_weighted_pca(rng, truth, 4.0);
  const Matrix x = gauss_matrix(rng, 6, 5, 1.0);
  double direct = 0.0;
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) {
      const double d = problem.w()(i, j) * (x(i, j) - truth.x_star(i, j));
      direct += 0.5 * d * d;
    }
  }
  EXPECT_NEAR(problem.loss(x), direct, 1e-12 * std::max(1.0, direct));
  EXPECT_EQ(problem.grad(truth.x_star).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_TRUE(problem.init_surrogate() == truth.x_star);
}

TEST(WeightedPca, RatioPinnedExactly) {
  Rng rng(44);
  const GroundTruth truth = make_ground_truth(rng, 10, 10, 2, 1.0);
  const WeightedPcaProblem problem = make_weighted_pca(rng, truth, 4.0);
  const double wmax = problem.w().maxCoeff();
  const double wmin = problem.w().minCoeff();
  EXPECT_EQ(wmax * wmax / (wmin * wmin), 4.0);
  EXPECT_EQ(problem.l_g(), 4.0);
  EXPECT_EQ(problem.mu(), 1.0);

  const WeightedPcaProblem flat = make_weighted_pca(rng, truth, 1.0);
  EXPECT_EQ(flat.w().minCoeff(), 1.0);
  EXPECT_EQ(flat.w().maxCoeff(), 1.0);

  EXPECT_THROW(make_weighted_pca(rng, truth, 0.5), std::invalid_argument);
}

TEST(WeightedPca, SmoothStronglyConvexSandwich) {
  Rng rng(12);
  const GroundTruth truth = make_ground_truth(rng, 8, 8, 2, 2.0);
  const WeightedPcaProblem problem = make_weighted_pca(rng, truth, 4.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x1 = gauss_matrix(rng, 8, 4, 0.7) * gauss_matrix(rng, 8, 4, 0.7).transpose();
    const Matrix x2 = gauss_matrix(rng, 8, 4, 0.7) * gauss_matrix(rng, 8, 4, 0.7).transpose();
    const double gap = problem.loss(x1) - problem.loss(x2) -
                       (problem.grad(x2).array() * (x1 - x2).array()).sum();
    const double dist = 0.5 * (x1 - x2).squaredNorm();
    ASSERT_GE(gap, problem.mu() * dist - 1e-9 * std::max(1.0, dist));
    ASSERT_LE(gap, problem.l_g() * dist + 1e-9 * std::max(1.0, dist));
  }
}

TEST(OneBit, ClosedFormAtZero) {
  const GroundTruth truth = zero_truth(2, 2);
  const OneBitProblem problem = make_one_bit(truth);
  EXPECT_EQ(problem.alpha().minCoeff(), 0.5);
  EXPECT_EQ(problem.alpha().maxCoeff(), 0.5);
  EXPECT_NEAR(problem.loss(Matrix::Zero(2, 2)), 4.0 * std::log(2.0), 1e-12);
}

TEST(OneBit, StationaryAtTruth) {
  Rng rng(61);
  const GroundTruth truth = make_ground_truth(rng, 7, 7, 2, 3.0);
  const OneBitProblem problem = make_one_bit(truth);
  EXPECT_LE(problem.grad(truth.x_star).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(OneBit, StableForLargeEntries) {
  const GroundTruth truth = zero_truth(2, 2);
  const OneBitProblem problem = make_one_bit(truth);
  Matrix x(2, 2);
  x << 700.0, -700.0, 650.0, -650.0;
  EXPECT_TRUE(std::isfinite(problem.loss(x)));
  EXPECT_TRUE(problem.grad(x).allFinite());
  // softplus(x) -> x for large x, -> 0 for very negative x
  Matrix big = Matrix::Constant(2, 2, 700.0);
  EXPECT_NEAR(problem.loss(big), 4.0 * (700.0 - 0.5 * 700.0), 1e-9);
}

TEST(OneBit, InitSurrogateInvertsLink) {
  Rng rng(62);
  const GroundTruth truth = make_ground_truth(rng, 6, 6, 2, 2.0);
  const OneBitProblem problem = make_one_bit(truth);
  EXPECT_LE((problem.init_surrogate() - truth.x_star).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(OneBit, RejectsAlphaOutsideUnitInterval) {
  EXPECT_THROW(OneBitProblem(Matrix::Constant(2, 2, 1.5)), std::invalid_argument);
  EXPECT_THROW(OneBitProblem(Matrix::Constant(2, 2, -0.1)), std::invalid_argument);
}

TEST(Completion, FullObservationNoiseless) {
  Rng rng(71);
  const GroundTruth truth = make_ground_truth(rng, 8, 8, 2, 2.0);
  const CompletionProblem problem = make_completion(rng, truth, 1.0, 0.0);
  EXPECT_EQ(problem.omega_mask().minCoeff(), 1.0);
  EXPECT_TRUE(problem.m_obs() == truth.x_star);
  EXPECT_LE(problem.loss(truth.x_star), 1e-20);
  EXPECT_EQ(problem.grad(truth.x_star).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Completion, FillFractionWithinThreeSigma) {
  Rng rng(81);
  const GroundTruth truth = make_ground_truth(rng, 512, 512, 2, 1.0);
  const double p = 0.25;
  const CompletionProblem problem = make_completion(rng, truth, p, 0.0);
  const double count = problem.omega_mask().sum();
  const double n = 512.0 * 512.0;
  const double sigma = std::sqrt(n * p * (1.0 - p));
  EXPECT_NEAR(count, n * p, 3.0 * sigma);
}

TEST(Completion, ObservedEntriesAreMaskedNoisyTruth) {
  Rng rng(91);
  const GroundTruth truth = make_ground_truth(rng, 10, 10, 2, 1.0);
  const CompletionProblem problem = make_completion(rng, truth, 0.6, 0.0);
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (Eigen::Index j = 0; j < 10; ++j) {
      if (problem.omega_mask()(i, j) == 1.0) {
        ASSERT_EQ(problem.m_obs()(i, j), truth.x_star(i, j));  // nu = 0
      } else {
        ASSERT_EQ(problem.m_obs()(i, j), 0.0);
      }
    }
  }
  EXPECT_TRUE(problem.init_surrogate() == problem.m_obs() / 0.6);
}

TEST(Completion, ValidationErrors) {
  Rng rng(14);
  const GroundTruth truth = make_ground_truth(rng, 5, 5, 1, 1.0);
  EXPECT_THROW(make_completion(rng, truth, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(make_completion(rng, truth, 1.5, 0.0), std::invalid_argument);
  EXPECT_THROW(CompletionProblem(Matrix::Constant(3, 3, 0.5), Matrix::Zero(3, 3), 0.5),
               std::invalid_argument);
  Matrix mask = Matrix::Zero(3, 3);
  Matrix obs = Matrix::Ones(3, 3);  // nonzero where mask is zero
  EXPECT_THROW(CompletionProblem(mask, obs, 0.5), std::invalid_argument);
}

TEST(Completion, Determinism) {
  Rng a(7);
  Rng b(7);
  const GroundTruth ta = make_ground_truth(a, 12, 12, 2, 2.0);
  const GroundTruth tb = make_ground_truth(b, 12, 12, 2, 2.0);
  const CompletionProblem pa = make_completion(a, ta, 0.5, 0.01);
  const CompletionProblem pb = make_completion(b, tb, 0.5, 0.01);
  EXPECT_TRUE(pa.m_obs() == pb.m_obs());
  EXPECT_TRUE(pa.omega_mask() == pb.omega_mask());
}

TEST(Gradients, MatchFiniteDifferencesForAllKinds) {
  Rng rng(2718);
  const GroundTruth truth = make_ground_truth(rng, 7, 6, 2, 3.0);

  std::vector<std::unique_ptr<Problem>> problems;
  problems.push_back(std::make_unique<SensingProblem>(make_sensing(rng, truth, 40, 0.05)));
  problems.push_back(std::make_unique<WeightedPcaProblem>(make_weighted_pca(rng, truth, 4.0)));
  problems.push_back(std::make_unique<OneBitProblem>(make_one_bit(truth)));
  problems.push_back(std::make_unique<CompletionProblem>(make_completion(rng, truth, 0.7, 0.01)));

  for (const auto& problem : problems) {
    SCOPED_TRACE(problem->kind());
    for (int trial = 0; trial < 20; ++trial) {
      expect_grad_matches_fd(*problem, gauss_matrix(rng, 7, 6, 0.8));
    }
  }
}

}  // namespace
}  // namespace lowrank
