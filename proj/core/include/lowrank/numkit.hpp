#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <vector>

namespace lowrank {

// Row-major dense double matrix; the single matrix type used across the library.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Deterministic pseudo-random generator (xoshiro256++ seeded via SplitMix64).
///
/// The generator, the seeding procedure, and the Gaussian transform (Marsaglia
/// polar) are all fixed by this library so that a seed reproduces the same draw
/// sequence on every build. Single-owner mutable state: never share one instance
/// across threads; derive independent children with derive() instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();

  /// Standard normal via the polar method; consumes a variable number of
  /// uniforms, caches the paired deviate.
  double normal();

  /// Stateless seed-splitting: an independent child seed for parallel trial
  /// `index` under root seed `root`.
  static std::uint64_t derive(std::uint64_t root, std::uint64_t index);

 private:
  std::array<std::uint64_t, 4> s_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// i.i.d. Gaussian entries, mean 0, standard deviation `stddev`, filled in
/// row-major order from `rng`. stddev = 0 gives the zero matrix.
Matrix gauss_matrix(Rng& rng, int rows, int cols, double stddev = 1.0);

/// Top-k singular triplets of a dense matrix: a ~ u * s.asDiagonal() * v^T.
/// s is non-negative and non-increasing; u, v have orthonormal columns.
struct ThinSvd {
  Matrix u;
  Vector s;
  Matrix v;
};

/// Dense SVD truncated to the leading k triplets (k <= min(rows, cols)).
/// Throws std::invalid_argument on non-finite input or a bad k, and
/// std::runtime_error if the decomposition fails to converge.
ThinSvd thin_svd(const Matrix& a, int k);

/// Relative eigenvalue cutoff below which a Gram matrix's spectrum is treated
/// as zero when pseudo-inverting. Over-parameterized factors make F^T F
/// genuinely singular, so a relative cutoff is mandatory.
inline constexpr double kGramPinvCutoff = 1e-12;

/// Moore-Penrose pseudo-inverse of the Gram matrix F^T F (r x r, symmetric
/// PSD). Eigenvalues below kGramPinvCutoff * lambda_max are treated as zero.
Matrix gram_pinv(const Matrix& f);

/// Square root of gram_pinv(f): (F^T F)^{+1/2}, used by the dual norms.
Matrix gram_pinv_sqrt(const Matrix& f);

/// Geometrically spaced singular values sigma_i = kappa^{(r_star-i)/(r_star-1)}
/// for i = 1..r_star: exactly kappa down to exactly 1, max/min ratio kappa.
/// r_star == 1 is only valid with kappa == 1 (single value cannot realize a
/// ratio). Throws std::invalid_argument on kappa < 1 or an impossible request.
std::vector<double> condition_spectrum(int r_star, double kappa);

}  // namespace lowrank
