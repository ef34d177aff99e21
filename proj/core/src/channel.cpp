#include "amc/channel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace amc {

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

ChannelTaps rayleigh_taps(std::span<const double> power_profile_db, RngStream& rng) {
  if (power_profile_db.empty()) throw std::invalid_argument("rayleigh_taps: empty power profile");
  std::vector<double> var(power_profile_db.size());
  double total = 0;
  for (std::size_t i = 0; i < var.size(); ++i) {
    if (!std::isfinite(power_profile_db[i])) throw std::invalid_argument("rayleigh_taps: non-finite power");
    total += (var[i] = db_to_linear(power_profile_db[i]));
  }
  ChannelTaps h;
  h.taps.reserve(var.size());
  for (double v : var) h.taps.push_back(std::sqrt(v / total) * rng.cnormal());
  return h;
}

double raised_cosine(double t, double rolloff, double period) {
  const double x = t / period;
  if (rolloff > 0) {
    const double edge = 1.0 / (2.0 * rolloff);
    if (std::abs(std::abs(x) - edge) < 1e-9) return std::numbers::pi / 4.0 * sinc(edge);
    const double d = 2.0 * rolloff * x;
    return sinc(x) * std::cos(std::numbers::pi * rolloff * x) / (1.0 - d * d);
  }
  return sinc(x);
}

ChannelTaps two_path_taps(std::span<const double> delays, std::span<const double> powers_db, double rolloff,
                          std::size_t L, RngStream& rng) {
  if (L == 0) throw std::invalid_argument("two_path_taps: L must be positive");
  if (delays.size() != powers_db.size() || delays.empty())
    throw std::invalid_argument("two_path_taps: delays and powers must be non-empty and of equal length");

  const std::size_t P = delays.size();
  std::vector<double> var(P);
  for (std::size_t p = 0; p < P; ++p) var[p] = db_to_linear(powers_db[p]);

  // pulse(k, p) = rc(k - tau_p); E||h||^2 = sum_p var_p sum_k pulse(k, p)^2.
  std::vector<double> pulse(L * P);
  double expected = 0;
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t k = 0; k < L; ++k) {
      const double v = raised_cosine(static_cast<double>(k) - delays[p], rolloff);
      pulse[k * P + p] = v;
      expected += var[p] * v * v;
    }
  if (!(expected > 0)) throw std::invalid_argument("two_path_taps: channel has zero expected energy");
  const double norm = 1.0 / std::sqrt(expected);

  std::vector<cplx> gains(P);
  for (std::size_t p = 0; p < P; ++p) gains[p] = std::sqrt(var[p]) * rng.cnormal();

  ChannelTaps h;
  h.taps.assign(L, cplx{});
  for (std::size_t k = 0; k < L; ++k)
    for (std::size_t p = 0; p < P; ++p) h.taps[k] += norm * pulse[k * P + p] * gains[p];
  return h;
}

CMatrix convolution_matrix(std::span<const cplx> symbols, std::size_t N, std::size_t L) {
  if (L == 0 || symbols.size() != N + L - 1)
    throw std::invalid_argument("convolution_matrix: expected N + L - 1 symbols");
  CMatrix S(N, L);
  // symbols[i] = s_{i - L + 1}; row k, column j holds s_{k - j}.
  for (std::size_t k = 0; k < N; ++k)
    for (std::size_t j = 0; j < L; ++j) S(k, j) = symbols[k - j + L - 1];
  return S;
}

std::vector<cplx> convolve(std::span<const cplx> symbols, std::span<const cplx> taps, std::size_t N) {
  const std::size_t L = taps.size();
  if (L == 0 || symbols.size() != N + L - 1) throw std::invalid_argument("convolve: expected N + L - 1 symbols");
  std::vector<cplx> r(N);
  for (std::size_t k = 0; k < N; ++k) {
    cplx acc{};
    for (std::size_t j = 0; j < L; ++j) acc += taps[j] * symbols[k - j + L - 1];
    r[k] = acc;
  }
  return r;
}

ReceivedBlock transmit(const Constellation& constellation, const ChannelTaps& taps, double sigma2, std::size_t N,
                       RngStream& rng) {
  if (!(sigma2 >= 0)) throw std::invalid_argument("transmit: sigma2 must be >= 0");
  if (N == 0 || taps.length() == 0) throw std::invalid_argument("transmit: N and L must be positive");

  const std::size_t L = taps.length();
  std::vector<cplx> symbols(N + L - 1);
  const auto M = static_cast<double>(constellation.size());
  for (auto& s : symbols) {
    auto idx = static_cast<std::size_t>(rng.uniform() * M);
    if (idx >= constellation.size()) idx = constellation.size() - 1;
    s = constellation.points[idx];
  }

  ReceivedBlock block;
  block.taps = L;
  block.samples = convolve(symbols, taps.taps, N);
  const double sd = std::sqrt(sigma2);
  for (auto& r : block.samples) r += sd * rng.cnormal();
  block.truth = BlockTruth{constellation.kind, std::move(symbols), taps, sigma2};
  return block;
}

double snr_db_to_sigma2(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

}  // namespace amc
