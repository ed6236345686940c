#include "lowrank/numkit.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lowrank {

namespace {

constexpr std::uint64_t kSplitMixGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += kSplitMixGamma);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& word : s_) {
    word = splitmix64(sm);
  }
  // xoshiro forbids the all-zero state; unreachable from SplitMix64 seeding in
  // practice, but guard anyway.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) {
    s_[0] = 1;
  }
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, q;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    q = u * u + v * v;
  } while (q >= 1.0 || q == 0.0);
  const double f = std::sqrt(-2.0 * std::log(q) / q);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

std::uint64_t Rng::derive(std::uint64_t root, std::uint64_t index) {
  std::uint64_t state = root ^ (kSplitMixGamma * (index + 1));
  std::uint64_t mixed = splitmix64(state);
  return splitmix64(state) ^ mixed;
}

Matrix gauss_matrix(Rng& rng, int rows, int cols, double stddev) {
  if (rows <= 0 || cols <= 0) {
    throw std::invalid_argument("gauss_matrix: dimensions must be positive");
  }
  if (stddev < 0.0) {
    throw std::invalid_argument("gauss_matrix: stddev must be non-negative");
  }
  Matrix out(rows, cols);
  if (stddev == 0.0) {
    out.setZero();
    return out;
  }
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      out(i, j) = stddev * rng.normal();
    }
  }
  return out;
}

ThinSvd thin_svd(const Matrix& a, int k) {
  if (!a.allFinite()) {
    throw std::invalid_argument("thin_svd: input has non-finite entries");
  }
  const int max_rank = static_cast<int>(std::min(a.rows(), a.cols()));
  if (k < 1 || k > max_rank) {
    throw std::invalid_argument("thin_svd: k must satisfy 1 <= k <= min(rows, cols), got " +
                                std::to_string(k));
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) {
    throw std::runtime_error("thin_svd: decomposition did not converge");
  }
  ThinSvd out;
  out.u = svd.matrixU().leftCols(k);
  out.s = svd.singularValues().head(k);
  out.v = svd.matrixV().leftCols(k);
  return out;
}

namespace {

// Eigendecomposition of F^T F with eigenvalues clamped at zero, shared by the
// two pseudo-inverse variants. Returns (eigenvectors, eigenvalues ascending).
std::pair<Matrix, Vector> gram_eigs(const Matrix& f, const char* caller) {
  if (!f.allFinite()) {
    throw std::invalid_argument(std::string(caller) + ": input has non-finite entries");
  }
  Matrix gram = f.transpose() * f;
  gram = 0.5 * (gram + gram.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error(std::string(caller) + ": eigendecomposition failed");
  }
  Vector evals = es.eigenvalues().cwiseMax(0.0);
  return {Matrix(es.eigenvectors()), evals};
}

}  // namespace

Matrix gram_pinv(const Matrix& f) {
  auto [q, evals] = gram_eigs(f, "gram_pinv");
  const double cutoff = kGramPinvCutoff * evals.maxCoeff();
  Vector inv = evals;
  for (int i = 0; i < inv.size(); ++i) {
    inv[i] = evals[i] > cutoff && evals[i] > 0.0 ? 1.0 / evals[i] : 0.0;
  }
  return q * inv.asDiagonal() * q.transpose();
}

Matrix gram_pinv_sqrt(const Matrix& f) {
  auto [q, evals] = gram_eigs(f, "gram_pinv_sqrt");
  const double cutoff = kGramPinvCutoff * evals.maxCoeff();
  Vector inv_sqrt = evals;
  for (int i = 0; i < inv_sqrt.size(); ++i) {
    inv_sqrt[i] = evals[i] > cutoff && evals[i] > 0.0 ? 1.0 / std::sqrt(evals[i]) : 0.0;
  }
  return q * inv_sqrt.asDiagonal() * q.transpose();
}

std::vector<double> condition_spectrum(int r_star, double kappa) {
  if (r_star < 1) {
    throw std::invalid_argument("condition_spectrum: r_star must be positive");
  }
  if (kappa < 1.0) {
    throw std::invalid_argument("condition_spectrum: kappa must be >= 1");
  }
  if (r_star == 1) {
    if (kappa != 1.0) {
      throw std::invalid_argument(
          "condition_spectrum: a single singular value cannot realize kappa > 1");
    }
    return {1.0};
  }
  std::vector<double> sigma(r_star);
  sigma.front() = kappa;
  sigma.back() = 1.0;
  for (int i = 1; i + 1 < r_star; ++i) {
    sigma[i] = std::pow(kappa, static_cast<double>(r_star - 1 - i) /
                                   static_cast<double>(r_star - 1));
  }
  return sigma;
}

}  // namespace lowrank
