#include "amc/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <stdexcept>
#include <thread>

namespace amc {

namespace {

constexpr std::uint64_t kDataDomain = 1;
constexpr std::uint64_t kChainDomain = 2;

std::uint64_t variant_key(const Variant& v) {
  return derive_key({static_cast<std::uint64_t>(v.mode), std::bit_cast<std::uint64_t>(v.gamma)});
}

std::size_t resolve_workers(const ExperimentConfig& cfg, const SweepOptions& options) {
  std::size_t w = options.workers ? options.workers : cfg.workers;
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  return w;
}

}  // namespace

std::vector<Variant> expand_variants(const ExperimentConfig& cfg) {
  std::vector<Variant> out;
  for (auto mode : cfg.modes) {
    if (mode == SamplerMode::LatentDirichlet) {
      for (double g : cfg.gamma) out.push_back({mode, g});
    } else {
      out.push_back({mode, 0.0});
    }
  }
  return out;
}

Priors make_priors(const ExperimentConfig& cfg, const Variant& variant) {
  Priors p = Priors::uniform(cfg.constellations.size(), variant.gamma);
  p.alpha_h = cfg.alpha_h;
  p.alpha0 = cfg.alpha0;
  p.beta0 = cfg.beta0;
  return p;
}

ChainConfig make_chain_config(const ExperimentConfig& cfg, const Variant& variant) {
  ChainConfig c;
  c.samples = cfg.samples;
  c.burn_in = cfg.burn_in;
  c.mode = variant.mode;
  c.annealing.kind = cfg.annealing;
  c.annealing.rho0 = cfg.anneal_rho0;
  return c;
}

Classification gibbs_classifier(const ReceivedBlock& block, const ConstellationSet& set, const Priors& priors,
                                const ChainConfig& chain, RngStream& rng) {
  return classify(run_chain(block, set, priors, chain, rng));
}

ReceivedBlock synthesize_trial_block(const ExperimentConfig& cfg, const ConstellationSet& set, std::size_t snr_index,
                                     std::size_t trial_index) {
  RngStream rng(cfg.seed, derive_key({kDataDomain, snr_index, trial_index}));
  const std::size_t K = set.num_members();
  const auto truth = std::min(static_cast<std::size_t>(rng.uniform() * static_cast<double>(K)), K - 1);

  const ChannelTaps taps =
      cfg.channel == ChannelModel::Tapped
          ? rayleigh_taps(cfg.power_profile_db, rng)
          : two_path_taps(cfg.path_delays, cfg.path_powers_db, cfg.rolloff, cfg.taps, rng);
  const double sigma2 = snr_db_to_sigma2(cfg.snr_db.at(snr_index));
  return transmit(set.member(truth), taps, sigma2, cfg.block_length, rng);
}

TrialResult run_trial(const ExperimentConfig& cfg, std::size_t snr_index, std::size_t trial_index,
                      const Variant& variant, const Classifier& classifier) {
  const ConstellationSet set(cfg.constellations);
  const ReceivedBlock block = synthesize_trial_block(cfg, set, snr_index, trial_index);

  RngStream rng(cfg.seed, derive_key({kChainDomain, snr_index, trial_index, variant_key(variant)}));
  const auto start = std::chrono::steady_clock::now();
  const Classification c = classifier(block, set, make_priors(cfg, variant), make_chain_config(cfg, variant), rng);
  const auto stop = std::chrono::steady_clock::now();

  TrialResult out;
  out.truth = static_cast<std::size_t>(set.index_of(block.truth->constellation));
  out.estimate = c.estimate;
  out.scores = c.scores;
  out.seconds = std::chrono::duration<double>(stop - start).count();
  return out;
}

const PccRow* PccTable::find(double snr_db, const Variant& variant) const {
  for (const auto& r : rows)
    if (r.snr_db == snr_db && r.variant == variant) return &r;
  return nullptr;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2 * nn)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nn + z2 / (4 * nn * nn)) / denom;
  return {std::max(0.0, std::min(p, centre - half)), std::min(1.0, std::max(p, centre + half))};
}

PccTable run_sweep(const ExperimentConfig& cfg, const SweepOptions& options) {
  cfg.validate();
  const ConstellationSet set(cfg.constellations);
  const auto variants = expand_variants(cfg);
  const std::size_t V = variants.size();
  const std::size_t T = cfg.trials;
  const std::size_t S = cfg.snr_db.size();
  const std::size_t total = S * T * V;

  std::vector<TrialResult> results(total);
  std::vector<char> done(total, 0);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mu;

  auto worker = [&] {
    for (;;) {
      if (failed.load() || (options.stop && options.stop->load())) return;
      const std::size_t job = next.fetch_add(1);
      if (job >= total) return;
      const std::size_t snr = job / (T * V);
      const std::size_t trial = (job / V) % T;
      const std::size_t var = job % V;
      try {
        results[job] = run_trial(cfg, snr, trial, variants[var], options.classifier);
        done[job] = 1;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
      const std::size_t n = ++finished;
      if (options.progress) {
        std::lock_guard lock(mu);
        options.progress(n, total);
      }
    }
  };

  const std::size_t workers = std::min(resolve_workers(cfg, options), std::max<std::size_t>(total, 1));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  PccTable table;
  table.members = set.num_members();
  const std::size_t K = table.members;
  for (std::size_t snr = 0; snr < S; ++snr) {
    const auto first = done.begin() + static_cast<std::ptrdiff_t>(snr * T * V);
    if (!std::all_of(first, first + static_cast<std::ptrdiff_t>(T * V), [](char d) { return d != 0; })) {
      table.complete = false;
      continue;
    }
    for (std::size_t var = 0; var < V; ++var) {
      PccRow row;
      row.snr_db = cfg.snr_db[snr];
      row.variant = variants[var];
      row.trials = T;
      row.confusion.assign(K * K, 0);
      std::size_t correct = 0;
      double secs = 0;
      for (std::size_t trial = 0; trial < T; ++trial) {
        const auto& r = results[(snr * T + trial) * V + var];
        ++row.confusion[r.truth * K + r.estimate];
        correct += r.truth == r.estimate;
        secs += r.seconds;
      }
      row.pcc = static_cast<double>(correct) / static_cast<double>(T);
      std::tie(row.ci_lo, row.ci_hi) = wilson_interval(correct, T);
      row.secs_per_trial = secs / static_cast<double>(T);
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

std::vector<cplx> read_iq(std::istream& in, std::string_view source) {
  std::vector<cplx> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long index = 0;
    double re = 0, im = 0;
    if (!(ls >> index)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw std::runtime_error(std::string(source) + ":" + std::to_string(line_no) + ": expected 'index re im'");
    }
    std::string extra;
    if (!(ls >> re >> im) || (ls >> extra))
      throw std::runtime_error(std::string(source) + ":" + std::to_string(line_no) + ": expected 'index re im'");
    if (index != static_cast<long long>(out.size()))
      throw std::runtime_error(std::string(source) + ":" + std::to_string(line_no) + ": expected index " +
                               std::to_string(out.size()) + ", got " + std::to_string(index));
    if (!std::isfinite(re) || !std::isfinite(im))
      throw std::runtime_error(std::string(source) + ":" + std::to_string(line_no) + ": non-finite sample");
    out.emplace_back(re, im);
  }
  if (out.empty()) throw std::runtime_error(std::string(source) + ": no samples");
  return out;
}

std::vector<cplx> read_iq_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open IQ file '" + path.string() + "'");
  return read_iq(in, path.string());
}

void write_iq(std::span<const cplx> samples, std::ostream& out) {
  char buf[96];
  for (std::size_t k = 0; k < samples.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", k, samples[k].real(), samples[k].imag());
    out << buf;
  }
}

void write_results(const PccTable& table, std::ostream& out) {
  out << kCsvHeader << '\n';
  char buf[64];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%.4f", r.snr_db);
    out << buf << ',' << to_string(r.variant.mode) << ',';
    std::snprintf(buf, sizeof buf, "%g", r.variant.gamma);
    out << buf << ',' << r.trials << ',';
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,", r.pcc, r.ci_lo, r.ci_hi);
    out << buf;
    for (std::size_t i = 0; i < r.confusion.size(); ++i) out << (i ? ";" : "") << r.confusion[i];
    std::snprintf(buf, sizeof buf, ",%.6f", r.secs_per_trial);
    out << buf << '\n';
  }
}

void write_results(const PccTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write results file '" + path.string() + "'");
  write_results(table, out);
  if (!out) throw std::runtime_error("failed writing results file '" + path.string() + "'");
}

}  // namespace amc
