#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "amc/constellation.hpp"
#include "amc/gibbs.hpp"

namespace amc {

enum class ChannelModel { Tapped, TwoPath };

std::string_view to_string(ChannelModel model);
ChannelModel parse_channel_model(std::string_view label);

/// One Monte Carlo experiment: a grid of SNR points, each run for `trials`
/// blocks under every sampler variant (mode, gamma).
///
/// Config files are flat UTF-8 text, one `key = value` per line, `#` starts a
/// comment, list values are comma-separated. Recognized keys:
///
///   constellations    list of qpsk | 8psk | 16qam
///   channel           tapped | two-path
///   power_profile_db  tap powers for `tapped` (dB); L is the list length
///   path_delays       path delays in symbol periods for `two-path`
///   path_powers_db    path powers for `two-path` (dB)
///   rolloff           raised-cosine roll-off for `two-path`
///   taps              L for `two-path`
///   block_length      N
///   snr_db            list of SNR points (dB), sigma2 = 10^(-snr/10)
///   trials            blocks per SNR point
///   samples           retained sweeps M
///   burn_in           discarded sweeps M0
///   modes             list of latent-dirichlet | superconstellation | conventional
///   gamma             list of Dirichlet concentrations (latent-dirichlet only)
///   alpha_h           channel prior variance
///   alpha0, beta0     inverse-gamma noise prior
///   annealing         none | linear | logarithmic
///   anneal_rho0       initial temperature
///   seed              master seed
///   workers           worker threads, 0 = hardware concurrency
///
/// Unknown keys, duplicate keys and malformed values are rejected.
struct ExperimentConfig {
  std::vector<ConstellationKind> constellations{ConstellationKind::QPSK, ConstellationKind::PSK8,
                                                ConstellationKind::QAM16};
  ChannelModel channel = ChannelModel::Tapped;
  std::vector<double> power_profile_db{0.0, -0.9, -4.9};
  std::vector<double> path_delays{0.0, 1.3};
  std::vector<double> path_powers_db{0.0, -0.9};
  double rolloff = 0.3;
  std::size_t taps = 6;
  std::size_t block_length = 100;
  std::vector<double> snr_db{0.0, 5.0, 10.0, 15.0, 20.0};
  std::size_t trials = 100;
  std::size_t samples = 300;
  std::size_t burn_in = 100;
  std::vector<SamplerMode> modes{SamplerMode::LatentDirichlet, SamplerMode::Superconstellation};
  std::vector<double> gamma{15.0};
  double alpha_h = 1e3;
  double alpha0 = 1e-2;
  double beta0 = 1e-2;
  AnnealingKind annealing = AnnealingKind::None;
  double anneal_rho0 = 10.0;
  std::uint64_t seed = 1;
  std::size_t workers = 0;

  /// Channel memory L implied by the channel model.
  std::size_t channel_length() const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sets one key from its textual value. Throws ConfigError naming the key.
void apply_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Parses config text; `source` prefixes error messages ("tapped.cfg:12: ...").
ExperimentConfig parse_config(std::string_view text, std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Serializes every key; parse_config(format_config(c)) == c. With
/// `as_comments`, each line is prefixed by "# " (for embedding in output).
std::string format_config(const ExperimentConfig& cfg, bool as_comments = false);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace amc
