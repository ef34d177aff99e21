#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace amc {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

/// Deterministic random stream keyed by (seed, stream id).
///
/// Satisfies UniformRandomBitGenerator. Identical keys replay identical
/// draw sequences; distinct stream ids give statistically independent
/// sequences, so parallel trials can be keyed by index rather than by
/// scheduling order.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Uniform on [0, 1).
  double uniform();
  double normal();
  /// Circularly-symmetric CN(0, 1): real and imaginary parts each N(0, 1/2).
  std::complex<double> cnormal();
  /// Gamma(shape, scale = 1).
  double gamma(double shape);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Mixes a list of integers into a single 64-bit key (splitmix64 chain).
std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts);

/// Draws CN(mean, cov) from a pivoted Hermitian LDL^H factorization of cov.
/// Pivots down to -1e-10 (relative to the largest diagonal) are treated as
/// zero; anything more negative, or a non-Hermitian cov, throws
/// std::domain_error.
CVector sample_cgauss(const CVector& mean, const CMatrix& cov, RngStream& rng);

/// Dirichlet draw via normalized Gamma variates. All entries must be > 0.
std::vector<double> sample_dirichlet(std::span<const double> concentration, RngStream& rng);

/// Inverse-gamma IG(shape, scale): scale / Gamma(shape, 1).
double sample_invgamma(double shape, double scale, RngStream& rng);

/// Index i with probability weights[i] / sum(weights).
std::size_t sample_categorical(std::span<const double> weights, RngStream& rng);

/// Categorical over log-weights (-inf allowed). Stabilized by subtracting the
/// maximum. `scratch` must have the same length and is overwritten.
std::size_t sample_categorical_log(std::span<const double> log_weights, std::span<double> scratch,
                                   RngStream& rng);
std::size_t sample_categorical_log(std::span<const double> log_weights, RngStream& rng);

/// Normalized probabilities from log-weights, using the same stabilization.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

}  // namespace amc
