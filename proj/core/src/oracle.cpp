#include "amc/oracle.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace amc {

std::vector<double> exact_posterior_oracle(const ReceivedBlock& block, const ConstellationSet& set,
                                           const Priors& priors, std::span<const cplx> taps, double sigma2) {
  const std::size_t N = block.length();
  const std::size_t L = taps.size();
  const std::size_t ns = N + L - 1;
  const std::size_t K = set.num_members();
  const auto& pairs = set.pairs();

  if (L == 0 || L != block.taps) throw std::invalid_argument("oracle: tap count does not match the block");
  if (ns > kOracleMaxSymbols || pairs.size() > kOracleMaxPairs)
    throw std::invalid_argument("oracle: block too large to enumerate (N + L - 1 <= 5 and <= 28 pairs required)");
  if (!(sigma2 > 0)) throw std::invalid_argument("oracle: sigma2 must be > 0");
  if (priors.gamma.size() != K) throw std::invalid_argument("oracle: gamma length mismatch");
  for (double g : priors.gamma)
    if (!(g > 0)) throw std::invalid_argument("oracle: gamma entries must be > 0");

  double gamma_total = 0;
  for (double g : priors.gamma) gamma_total += g;

  // log Gamma(gamma_a + c) - log Gamma(gamma_a), for c = 0..ns.
  std::vector<double> lg_rise(K * (ns + 1));
  for (std::size_t a = 0; a < K; ++a)
    for (std::size_t c = 0; c <= ns; ++c)
      lg_rise[a * (ns + 1) + c] = std::lgamma(priors.gamma[a] + static_cast<double>(c)) - std::lgamma(priors.gamma[a]);
  const double lg_norm = std::lgamma(gamma_total) - std::lgamma(gamma_total + static_cast<double>(ns));

  std::vector<double> log_size(K);
  for (std::size_t a = 0; a < K; ++a) log_size[a] = std::log(static_cast<double>(set.member(a).size()));

  std::vector<std::size_t> digit(ns, 0);
  std::vector<cplx> s(ns);
  std::vector<int> c(K);

  double log_max = -std::numeric_limits<double>::infinity();
  double total = 0;
  std::vector<double> acc(K, 0.0);

  for (;;) {
    std::fill(c.begin(), c.end(), 0);
    double log_prior = lg_norm;
    for (std::size_t i = 0; i < ns; ++i) {
      const auto& pr = pairs[digit[i]];
      s[i] = set.super_points()[pr.point];
      ++c[pr.member];
      log_prior -= log_size[pr.member];
    }
    for (std::size_t a = 0; a < K; ++a) log_prior += lg_rise[a * (ns + 1) + c[a]];

    // r_k - sum_j h_j s_{k-j}, with s stored from time -L+1.
    double rss = 0;
    for (std::size_t k = 0; k < N; ++k) {
      cplx y = block.samples[k];
      for (std::size_t j = 0; j < L; ++j) y -= taps[j] * s[k + L - 1 - j];
      rss += std::norm(y);
    }
    const double lw = log_prior - rss / sigma2;

    if (lw > log_max) {
      const double rescale = std::exp(log_max - lw);
      total *= rescale;
      for (double& v : acc) v *= rescale;
      log_max = lw;
    }
    const double w = std::exp(lw - log_max);
    total += w;
    for (std::size_t a = 0; a < K; ++a)
      acc[a] += w * (priors.gamma[a] + c[a]) / (gamma_total + static_cast<double>(ns));

    std::size_t pos = 0;
    while (pos < ns && ++digit[pos] == pairs.size()) digit[pos++] = 0;
    if (pos == ns) break;
  }

  for (double& v : acc) v /= total;
  return acc;
}

OracleFixture make_oracle_fixture(const ConstellationSet& set, std::uint64_t seed, std::size_t index, std::size_t N,
                                  double sigma2) {
  RngStream rng(seed, derive_key({0x0A7AC1EULL, index}));
  const std::size_t K = set.num_members();
  const auto truth = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(K)), K - 1);
  const double flat[] = {0.0};
  ChannelTaps taps = rayleigh_taps(flat, rng);
  ReceivedBlock block = transmit(set.member(truth), taps, sigma2, N, rng);
  return {std::move(block), std::move(taps), sigma2};
}

ChainConfig oracle_chain_config(const OracleFixture& fixture, std::size_t samples, std::size_t burn_in) {
  ChainConfig c;
  c.samples = samples;
  c.burn_in = burn_in;
  c.mode = SamplerMode::LatentDirichlet;
  c.fixed_taps = fixture.taps;
  c.fixed_sigma2 = fixture.sigma2;
  return c;
}

}  // namespace amc
