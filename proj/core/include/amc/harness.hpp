#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "amc/channel.hpp"
#include "amc/config.hpp"
#include "amc/gibbs.hpp"

namespace amc {

/// One sampler configuration compared in a sweep.
struct Variant {
  SamplerMode mode;
  double gamma;  // 0 for modes that do not use a Dirichlet prior

  bool operator==(const Variant&) const = default;
};

/// latent-dirichlet expands to one variant per gamma; the other modes appear once.
std::vector<Variant> expand_variants(const ExperimentConfig& cfg);

Priors make_priors(const ExperimentConfig& cfg, const Variant& variant);
ChainConfig make_chain_config(const ExperimentConfig& cfg, const Variant& variant);

/// Replaceable classification step (the default runs one Gibbs chain).
using Classifier = std::function<Classification(const ReceivedBlock&, const ConstellationSet&, const Priors&,
                                                const ChainConfig&, RngStream&)>;

Classification gibbs_classifier(const ReceivedBlock& block, const ConstellationSet& set, const Priors& priors,
                                const ChainConfig& chain, RngStream& rng);

/// Block synthesis for one trial: true constellation uniform over the set,
/// channel per the configured model, sigma2 = 10^(-snr/10). Depends only on
/// (seed, snr_index, trial_index), so every variant sees the same block.
ReceivedBlock synthesize_trial_block(const ExperimentConfig& cfg, const ConstellationSet& set, std::size_t snr_index,
                                     std::size_t trial_index);

struct TrialResult {
  std::size_t truth = 0;
  std::size_t estimate = 0;
  std::vector<double> scores;
  double seconds = 0.0;
};

TrialResult run_trial(const ExperimentConfig& cfg, std::size_t snr_index, std::size_t trial_index,
                      const Variant& variant, const Classifier& classifier = gibbs_classifier);

struct PccRow {
  double snr_db = 0;
  Variant variant{SamplerMode::LatentDirichlet, 0};
  std::size_t trials = 0;
  double pcc = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  std::vector<std::size_t> confusion;  // K x K row-major, row = true member
  double secs_per_trial = 0;
};

struct PccTable {
  std::size_t members = 0;
  std::vector<PccRow> rows;  // SNR-major, then variant order
  bool complete = true;      // false when the sweep was interrupted

  const PccRow* find(double snr_db, const Variant& variant) const;
};

/// Wilson score interval for `successes` out of `n` at the given z.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct SweepOptions {
  std::size_t workers = 0;  // 0: take cfg.workers, then hardware concurrency
  Classifier classifier = gibbs_classifier;
  /// Polled between trials; when set, only fully finished SNR points are reported.
  const std::atomic<bool>* stop = nullptr;
  /// Called after each finished trial with (done, total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Runs trials x SNR grid x variants in parallel. Outcomes depend only on the
/// master seed and indices, never on the worker count or scheduling.
PccTable run_sweep(const ExperimentConfig& cfg, const SweepOptions& options = {});

inline constexpr const char* kCsvHeader = "snr_db,mode,gamma,n_trials,pcc,ci_lo,ci_hi,confusion_flat,secs_per_trial";

/// IQ text files hold one sample per line: `index re im`, whitespace
/// separated, indices 0..N-1 in order. Blank lines and `#` comments are
/// skipped. Throws std::runtime_error naming the offending line.
std::vector<cplx> read_iq(std::istream& in, std::string_view source = "<iq>");
std::vector<cplx> read_iq_file(const std::filesystem::path& path);
void write_iq(std::span<const cplx> samples, std::ostream& out);

void write_results(const PccTable& table, std::ostream& out);
void write_results(const PccTable& table, const std::filesystem::path& path);

}  // namespace amc
