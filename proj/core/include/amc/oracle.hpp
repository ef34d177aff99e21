#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "amc/channel.hpp"
#include "amc/constellation.hpp"
#include "amc/gibbs.hpp"

namespace amc {

/// Largest block the enumeration oracle accepts.
inline constexpr std::size_t kOracleMaxSymbols = 5;
inline constexpr std::size_t kOracleMaxPairs = 28;

/// Exact E[P_A | r] under the latent Dirichlet model with h and sigma2 known,
/// by enumerating every (point, label) assignment of all N + L - 1 symbols:
///
///   w(s, z) = exp(-||r - S h||^2 / sigma2) * prod_n 1/|z_n| * DirMult(z; gamma)
///   E[P_A | r] = sum w (gamma + c) / (sum gamma + N + L - 1) / sum w
///
/// It shares no code with the sampler. Throws std::invalid_argument when the
/// block exceeds the enumeration bound.
std::vector<double> exact_posterior_oracle(const ReceivedBlock& block, const ConstellationSet& set,
                                           const Priors& priors, std::span<const cplx> taps, double sigma2);

/// A small known-channel instance used to compare the sampler with the oracle.
struct OracleFixture {
  ReceivedBlock block;
  ChannelTaps taps;
  double sigma2;
};

/// Fixture `index` of the seeded family: N = 4, L = 1, unit-power Rayleigh
/// tap, sigma2 = `sigma2`, true constellation uniform over `set`.
OracleFixture make_oracle_fixture(const ConstellationSet& set, std::uint64_t seed, std::size_t index,
                                  std::size_t N = 4, double sigma2 = 0.05);

/// Chain settings for the comparison: h and sigma2 frozen at the fixture
/// values, latent-dirichlet mode, no annealing.
ChainConfig oracle_chain_config(const OracleFixture& fixture, std::size_t samples = 5000, std::size_t burn_in = 1000);

}  // namespace amc
