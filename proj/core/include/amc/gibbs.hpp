#pragma once

// Gibbs sampling over the latent Dirichlet mixture model
//
//   P_A ~ Dirichlet(gamma)
//   z_n | P_A ~ Cat(P_A),  s_n | z_n ~ U(constellation z_n)
//   h ~ CN(0, alpha_h I),  sigma2 ~ IG(alpha0, beta0)
//   r | s, h, sigma2 ~ CN(S h, rho sigma2 I)
//
// with the superconstellation baseline (P_A := c / sum c) and the
// conventional single-constellation sampler as alternative modes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "amc/channel.hpp"
#include "amc/constellation.hpp"
#include "amc/random.hpp"

namespace amc {

struct Priors {
  std::vector<double> gamma;  // Dirichlet concentration, one per member
  double alpha_h = 1e3;       // h ~ CN(0, alpha_h I)
  double alpha0 = 1e-2;       // sigma2 ~ IG(alpha0, beta0)
  double beta0 = 1e-2;

  static Priors uniform(std::size_t members, double gamma_value);
  /// Throws std::invalid_argument when a hyperparameter is out of range.
  void validate(std::size_t members, bool allow_zero_gamma) const;
};

enum class SamplerMode { LatentDirichlet, Superconstellation, Conventional };

std::string_view to_string(SamplerMode mode);
SamplerMode parse_sampler_mode(std::string_view label);

enum class AnnealingKind { None, Linear, Logarithmic };

std::string_view to_string(AnnealingKind kind);
AnnealingKind parse_annealing_kind(std::string_view label);

/// Temperature schedule rho(i). Starts at `rho0` and reaches 1 at sweep
/// `cooling_sweeps` (run_chain substitutes the burn-in length when 0).
struct AnnealingSchedule {
  AnnealingKind kind = AnnealingKind::None;
  double rho0 = 1.0;
  std::size_t cooling_sweeps = 0;
};

double anneal_temperature(const AnnealingSchedule& schedule, std::size_t sweep_index);

struct ChainConfig {
  std::size_t samples = 300;  // M, retained sweeps
  std::size_t burn_in = 100;  // M0, discarded sweeps
  AnnealingSchedule annealing;
  SamplerMode mode = SamplerMode::LatentDirichlet;

  /// Start every label (and the symbols) on this member instead of a prior draw.
  std::optional<std::size_t> initial_member;
  /// Hold h and/or sigma2 fixed at these values; their updates are skipped.
  std::optional<ChannelTaps> fixed_taps;
  std::optional<double> fixed_sigma2;
  /// Per-tap variance of the initial h draw; unset means 1/L (unit expected
  /// channel energy).
  std::optional<double> initial_tap_variance;

  /// Every this many sweeps, compare the cached residual and label counts
  /// against a full recompute and throw std::logic_error on mismatch. 0 = off.
#ifdef NDEBUG
  std::size_t verify_every = 0;
#else
  std::size_t verify_every = 50;
#endif

  void validate() const;
};

/// Full latent state of one chain. Symbols are stored as indices into the
/// set's super_points; index i corresponds to time n = i - (L - 1).
struct GibbsState {
  std::vector<int> points;
  std::vector<int> labels;
  std::vector<cplx> taps;
  double sigma2 = 1.0;
  std::vector<double> mixture;

  // Caches maintained incrementally by the sweep.
  std::vector<cplx> residual;  // r - S h
  double residual_norm2 = 0.0;
  std::vector<int> counts;     // label histogram

  std::vector<cplx> symbols(const ConstellationSet& set) const;
};

/// Checks symbol/label consistency, simplex membership of the mixture
/// (1e-12), sigma2 > 0 and shape agreement with the block.
bool state_valid(const GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set);

/// Rebuilds residual, residual_norm2 and counts from scratch.
void refresh_caches(GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set);

/// Largest absolute deviation between the cached and recomputed residual
/// entries and norm, and whether the cached counts match.
struct CacheCheck {
  double residual_error = 0.0;
  double norm_error = 0.0;
  bool counts_match = true;
};
CacheCheck check_caches(const GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set);

/// Builds a state from explicit values (used by tests and fixtures).
GibbsState make_state(const ReceivedBlock& block, const ConstellationSet& set, std::vector<int> points,
                      std::vector<int> labels, std::vector<cplx> taps, double sigma2, std::vector<double> mixture);

/// Initial state: P_A ~ Dirichlet(gamma) (uniform in baseline mode),
/// (z_n, s_n) from the prior given P_A, h ~ CN(0, v I) with v from
/// `initial_tap_variance`, sigma2 set to the mean received power.
GibbsState initialize_state(const ReceivedBlock& block, const ConstellationSet& set, const Priors& priors,
                            const ChainConfig& config, RngStream& rng);

// --- channel and noise conditionals ---------------------------------------

struct ChannelPosterior {
  CVector mean;
  CMatrix cov;
};

/// Sigma*^-1 = I / alpha_h + S^H S / sigma2,  h* = Sigma* S^H r / sigma2.
ChannelPosterior channel_posterior_params(const CMatrix& S, std::span<const cplx> r, double sigma2,
                                          const Priors& priors);

/// Draws h from its conditional (with likelihood variance rho * sigma2) and
/// stores it in `state`, refreshing the residual cache.
ChannelTaps sample_channel(GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set,
                           const Priors& priors, RngStream& rng, double temperature = 1.0);

struct NoisePosterior {
  double shape;
  double scale;
};

/// (alpha0 + N, beta0 + ||r - S h||^2).
NoisePosterior noise_posterior_params(std::span<const cplx> r, const CMatrix& S, std::span<const cplx> h,
                                      const Priors& priors);

/// Draws sigma2 ~ IG(alpha0 + N, beta0 + ||r - S h||^2 / rho) using the cached
/// residual, stores it in `state` and returns it.
double sample_noise_var(GibbsState& state, const ReceivedBlock& block, const Priors& priors, RngStream& rng,
                        double temperature = 1.0);

// --- symbol / label / mixture conditionals ---------------------------------

/// Log-weight of every (point, member) pair in set.pairs() for symbol time n
/// (n in [-L+1, N-1]):
///   log(P_A(a) / |a|) - sum_{k in rows(n)} |r_k - (S h)_k|_{s_n = v}|^2 / (rho sigma2)
std::vector<double> symbol_pair_logweights(std::ptrdiff_t n, const GibbsState& state, const ReceivedBlock& block,
                                           const ConstellationSet& set, double temperature = 1.0);

/// Draws (s_n, z_n) jointly and updates the residual and count caches on
/// rows(n) only.
SymbolPair sample_symbol(std::ptrdiff_t n, GibbsState& state, const ReceivedBlock& block,
                         const ConstellationSet& set, double temperature, RngStream& rng);

std::vector<int> count_labels(std::span<const int> labels, std::size_t members);

/// Dirichlet(gamma + c) draw.
std::vector<double> sample_mixture(std::span<const int> labels, const Priors& priors, RngStream& rng);

/// c / sum(c), no randomness.
std::vector<double> superconstellation_update(std::span<const int> labels, std::size_t members);

/// One systematic scan: P_A, then s_n / z_n for ascending n, then h, then sigma2.
void gibbs_sweep(GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set, const Priors& priors,
                 const ChainConfig& config, std::size_t sweep_index, RngStream& rng);

struct ChainResult {
  std::size_t members = 0;
  std::vector<std::vector<double>> mixture_samples;  // M retained P_A vectors
  std::vector<std::vector<int>> label_count_samples;  // M retained c vectors
  std::vector<double> loglik_trace;                   // log p(r | s, h, sigma2) per sweep
  bool all_states_valid = true;
  GibbsState final_state;
};

ChainResult run_chain(const ReceivedBlock& block, const ConstellationSet& set, const Priors& priors,
                      const ChainConfig& config, RngStream& rng);

struct Classification {
  std::size_t estimate = 0;
  std::vector<double> scores;  // E[P_A(a) | r]
};

/// Scores are the mean of the retained mixture samples; ties go to the
/// lowest member index.
Classification classify(const ChainResult& result);

/// Index of the largest score, lowest index on ties.
std::size_t argmax_lowest(std::span<const double> scores);

}  // namespace amc
