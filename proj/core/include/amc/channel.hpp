#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "amc/constellation.hpp"
#include "amc/random.hpp"

namespace amc {

/// Symbol-spaced channel impulse response h(0), ..., h((L-1)T).
struct ChannelTaps {
  std::vector<cplx> taps;

  std::size_t length() const { return taps.size(); }
};

/// Simulation ground truth attached to a synthesized block.
struct BlockTruth {
  ConstellationKind constellation;
  std::vector<cplx> symbols;  // s_{-L+1} .. s_{N-1}
  ChannelTaps taps;
  double sigma2;
};

/// N received samples at symbol rate, plus the tap count L the receiver
/// assumes for the channel.
struct ReceivedBlock {
  std::vector<cplx> samples;
  std::size_t taps = 1;
  std::optional<BlockTruth> truth;

  std::size_t length() const { return samples.size(); }
  /// Number of symbols the block depends on: N + L - 1.
  std::size_t num_symbols() const { return samples.size() + taps - 1; }
};

/// Independent Rayleigh taps with the given relative powers (dB), scaled so
/// that E[||h||^2] = 1.
ChannelTaps rayleigh_taps(std::span<const double> power_profile_db, RngStream& rng);

/// Raised-cosine pulse p(t) with roll-off `rolloff` and symbol period `period`.
double raised_cosine(double t, double rolloff, double period = 1.0);

/// Symbol-rate samples of a multipath channel with raised-cosine pulse:
/// h(kT) = sum_p g_p rc(kT - tau_p), k = 0..L-1, where the g_p are
/// independent Rayleigh gains. Delays are in symbol periods. The result is
/// scaled so that E[||h||^2] = 1 over the gain ensemble.
ChannelTaps two_path_taps(std::span<const double> delays, std::span<const double> powers_db, double rolloff,
                          std::size_t L, RngStream& rng);

/// Row-major N x L matrix whose row k is [s_k, s_{k-1}, ..., s_{k-L+1}];
/// `symbols` holds s_{-L+1} .. s_{N-1}.
CMatrix convolution_matrix(std::span<const cplx> symbols, std::size_t N, std::size_t L);

/// r = S h computed directly from the symbol sequence.
std::vector<cplx> convolve(std::span<const cplx> symbols, std::span<const cplx> taps, std::size_t N);

/// Draws N + L - 1 uniform symbols from `constellation` and forms
/// r = S h + w with w ~ CN(0, sigma2 I).
ReceivedBlock transmit(const Constellation& constellation, const ChannelTaps& taps, double sigma2, std::size_t N,
                       RngStream& rng);

/// sigma^2 = 10^(-snr_db / 10), i.e. SNR = 1 / sigma^2 for unit-power symbols
/// and a unit-energy channel.
double snr_db_to_sigma2(double snr_db);

}  // namespace amc
