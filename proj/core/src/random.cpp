#include "amc/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace amc {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = derive_key({seed, stream});
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(x)), static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x)), static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x)), static_cast<std::uint32_t>(splitmix64(x)),
                    static_cast<std::uint32_t>(splitmix64(x)), static_cast<std::uint32_t>(splitmix64(x))};
  return std::mt19937_64(seq);
}

}  // namespace

std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x243F6A8885A308D3ULL;
  std::uint64_t key = 0;
  for (auto p : parts) {
    state ^= p;
    key = splitmix64(state);
    state = key;
  }
  return key;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(seeded_engine(seed, stream)) {}

double RngStream::uniform() { return uniform_(engine_); }

double RngStream::normal() { return normal_(engine_); }

std::complex<double> RngStream::cnormal() {
  constexpr double kHalf = 0.70710678118654752440;
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {re * kHalf, im * kHalf};
}

double RngStream::gamma(double shape) {
  std::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

CVector sample_cgauss(const CVector& mean, const CMatrix& cov, RngStream& rng) {
  const Eigen::Index n = mean.size();
  if (cov.rows() != n || cov.cols() != n) throw std::invalid_argument("sample_cgauss: dimension mismatch");
  if (!mean.allFinite() || !cov.allFinite()) throw std::domain_error("sample_cgauss: non-finite input");

  const double scale = std::max(cov.diagonal().real().cwiseAbs().maxCoeff(), 1.0);
  if ((cov - cov.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::domain_error("sample_cgauss: covariance is not Hermitian");

  Eigen::LDLT<CMatrix> ldlt(cov);
  if (ldlt.info() != Eigen::Success) throw std::domain_error("sample_cgauss: factorization failed");

  Eigen::VectorXd d = ldlt.vectorD().real();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d(i) < -1e-10 * scale) throw std::domain_error("sample_cgauss: covariance is indefinite");
    d(i) = d(i) > 0 ? std::sqrt(d(i)) : 0.0;
  }

  CVector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.cnormal();

  // cov = P^T L D L^H P, so x = P^T L sqrt(D) z has covariance cov.
  CVector y = ldlt.matrixL() * (d.cast<std::complex<double>>().asDiagonal() * z);
  CVector x = ldlt.transpositionsP().transpose() * y;
  return mean + x;
}

std::vector<double> sample_dirichlet(std::span<const double> concentration, RngStream& rng) {
  if (concentration.empty()) throw std::invalid_argument("sample_dirichlet: empty concentration");
  for (double c : concentration)
    if (!(c > 0) || !std::isfinite(c)) throw std::invalid_argument("sample_dirichlet: concentration must be > 0");

  std::vector<double> out(concentration.size());
  double total = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = rng.gamma(concentration[i]);
    total += out[i];
  }
  if (!(total > 0)) {
    // Every component underflowed (possible only with tiny concentrations):
    // fall back to the component with the largest concentration.
    const auto k = std::max_element(concentration.begin(), concentration.end()) - concentration.begin();
    std::fill(out.begin(), out.end(), 0.0);
    out[k] = 1.0;
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

double sample_invgamma(double shape, double scale, RngStream& rng) {
  if (!(shape > 0) || !(scale > 0) || !std::isfinite(shape) || !std::isfinite(scale))
    throw std::invalid_argument("sample_invgamma: shape and scale must be positive and finite");
  return scale / rng.gamma(shape);
}

std::size_t sample_categorical(std::span<const double> weights, RngStream& rng) {
  double total = 0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0) throw std::invalid_argument("sample_categorical: weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0)) throw std::invalid_argument("sample_categorical: all weights are zero");

  const double u = rng.uniform() * total;
  double acc = 0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0) last_positive = i;
    acc += weights[i];
    if (u < acc) return i;
  }
  return last_positive;
}

std::size_t sample_categorical_log(std::span<const double> log_weights, std::span<double> scratch,
                                   RngStream& rng) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity())
      throw std::invalid_argument("sample_categorical_log: invalid log-weight");
    hi = std::max(hi, lw);
  }
  if (hi == -std::numeric_limits<double>::infinity())
    throw std::invalid_argument("sample_categorical_log: all weights are zero");

  double total = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    scratch[i] = std::exp(log_weights[i] - hi);
    total += scratch[i];
  }
  const double u = rng.uniform() * total;
  double acc = 0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (scratch[i] > 0) last_positive = i;
    acc += scratch[i];
    if (u < acc) return i;
  }
  return last_positive;
}

std::size_t sample_categorical_log(std::span<const double> log_weights, RngStream& rng) {
  std::vector<double> scratch(log_weights.size());
  return sample_categorical_log(log_weights, scratch, rng);
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) hi = std::max(hi, lw);
  std::vector<double> p(log_weights.size(), 0.0);
  if (hi == -std::numeric_limits<double>::infinity()) return p;
  double total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] = std::exp(log_weights[i] - hi));
  for (double& v : p) v /= total;
  return p;
}

}  // namespace amc
