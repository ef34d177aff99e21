// amc: modulation classification over unknown frequency-selective channels.
//
//   amc sweep    --config configs/tapped.cfg --out tapped.csv [--set key=value ...]
//   amc classify --input block.iq --taps 3 [--gamma 15 --mode latent-dirichlet]
//   amc oracle   [--instances 10]
//   amc selftest

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "amc/config.hpp"
#include "amc/constellation.hpp"
#include "amc/gibbs.hpp"
#include "amc/harness.hpp"
#include "amc/oracle.hpp"
#include "amc/selftest.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_interrupt(int) { g_stop = true; }

struct GlobalOptions {
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::size_t workers = 0;
  bool workers_set = false;
  std::string out;
};

void print_scores(const amc::ConstellationSet& set, const amc::Classification& c) {
  for (std::size_t a = 0; a < set.num_members(); ++a)
    std::printf("%-6s %.6f\n", std::string(amc::to_string(set.member(a).kind)).c_str(), c.scores[a]);
  std::printf("estimate %s\n", std::string(amc::to_string(set.member(c.estimate).kind)).c_str());
}

int run_sweep_cmd(const GlobalOptions& g, const std::string& config_path, const std::vector<std::string>& overrides,
                  bool quiet) {
  amc::ExperimentConfig cfg = config_path.empty() ? amc::ExperimentConfig{} : amc::load_config(config_path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw amc::ConfigError("--set expects key=value, got '" + kv + "'");
    std::string key = kv.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    amc::apply_config_value(cfg, key, kv.substr(eq + 1));
  }
  if (g.seed_set) cfg.seed = g.seed;
  if (g.workers_set) cfg.workers = g.workers;
  cfg.validate();

  std::signal(SIGINT, on_interrupt);
  amc::SweepOptions opts;
  opts.stop = &g_stop;
  if (!quiet)
    opts.progress = [](std::size_t done, std::size_t total) {
      if (done == total || done % 25 == 0) std::fprintf(stderr, "\r%zu / %zu trials", done, total);
      if (done == total) std::fprintf(stderr, "\n");
    };

  const amc::PccTable table = amc::run_sweep(cfg, opts);
  if (g.out.empty()) {
    amc::write_results(table, std::cout);
  } else {
    amc::write_results(table, g.out);
    amc::save_config(cfg, g.out + ".cfg");
  }
  if (!table.complete) {
    std::fprintf(stderr, "interrupted: wrote completed SNR points only\n");
    return 130;
  }
  return 0;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"Modulation classification by Gibbs sampling on a latent Dirichlet mixture"};
  app.require_subcommand(1);

  GlobalOptions g;
  auto* seed_opt = app.add_option("--seed", g.seed, "Master seed")->each([&](const std::string&) { g.seed_set = true; });
  (void)seed_opt;
  app.add_option("--workers", g.workers, "Worker threads (0 = all cores)")->each([&](const std::string&) {
    g.workers_set = true;
  });
  app.add_option("--out", g.out, "Output path (CSV for sweep)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run an SNR sweep and write the PCC table as CSV");
  std::string config_path;
  std::vector<std::string> overrides;
  bool quiet = false;
  sweep->add_option("-c,--config", config_path, "Experiment config file")->check(CLI::ExistingFile);
  sweep->add_option("--set", overrides, "Override a config key (key=value), repeatable");
  sweep->add_flag("-q,--quiet", quiet, "No progress output");

  // classify
  auto* cls = app.add_subcommand("classify", "Classify one received block read from an IQ text file");
  std::string input;
  std::size_t taps = 1;
  std::string constellations = "qpsk,8psk,16qam";
  std::string mode = "latent-dirichlet";
  std::string annealing = "none";
  double gamma = 15.0, rho0 = 10.0;
  amc::Priors defaults;
  double alpha_h = defaults.alpha_h, alpha0 = defaults.alpha0, beta0 = defaults.beta0;
  std::size_t samples = 300, burn_in = 100;
  cls->add_option("-i,--input", input, "IQ file: lines of 'index re im'")->required()->check(CLI::ExistingFile);
  cls->add_option("-L,--taps", taps, "Channel memory L in symbols")->capture_default_str();
  cls->add_option("--constellations", constellations, "Candidate set")->capture_default_str();
  cls->add_option("--mode", mode, "latent-dirichlet | superconstellation | conventional")->capture_default_str();
  cls->add_option("--gamma", gamma, "Dirichlet concentration per constellation")->capture_default_str();
  cls->add_option("--alpha-h", alpha_h, "Channel prior variance")->capture_default_str();
  cls->add_option("--alpha0", alpha0, "Noise prior shape")->capture_default_str();
  cls->add_option("--beta0", beta0, "Noise prior scale")->capture_default_str();
  cls->add_option("-M,--samples", samples, "Retained sweeps")->capture_default_str();
  cls->add_option("--burn-in", burn_in, "Discarded sweeps")->capture_default_str();
  cls->add_option("--annealing", annealing, "none | linear | logarithmic")->capture_default_str();
  cls->add_option("--rho0", rho0, "Initial annealing temperature")->capture_default_str();

  // oracle
  auto* orc = app.add_subcommand("oracle", "Compare the sampler with exact enumeration on small fixtures");
  std::size_t instances = 10, orc_samples = 5000, orc_burn = 1000;
  double tolerance = 0.05, orc_sigma2 = 0.05;
  orc->add_option("-n,--instances", instances, "Number of fixtures")->capture_default_str();
  orc->add_option("-M,--samples", orc_samples, "Retained sweeps")->capture_default_str();
  orc->add_option("--burn-in", orc_burn, "Discarded sweeps")->capture_default_str();
  orc->add_option("--sigma2", orc_sigma2, "Fixture noise variance")->capture_default_str();
  orc->add_option("--tolerance", tolerance, "Per-component tolerance")->capture_default_str();

  // selftest
  auto* st = app.add_subcommand("selftest", "Run the invariant suite");

  CLI11_PARSE(app, argc, argv);

  if (*sweep) return run_sweep_cmd(g, config_path, overrides, quiet);

  if (*cls) {
    amc::ExperimentConfig tmp;
    amc::apply_config_value(tmp, "constellations", constellations);
    const amc::ConstellationSet set(tmp.constellations);
    amc::ReceivedBlock block;
    block.samples = amc::read_iq_file(input);
    block.taps = taps;
    if (taps == 0 || block.length() < taps) throw std::invalid_argument("need L >= 1 and at least L samples");

    amc::ChainConfig chain;
    chain.samples = samples;
    chain.burn_in = burn_in;
    chain.mode = amc::parse_sampler_mode(mode);
    chain.annealing.kind = amc::parse_annealing_kind(annealing);
    chain.annealing.rho0 = rho0;
    amc::Priors priors = amc::Priors::uniform(set.num_members(), chain.mode == amc::SamplerMode::LatentDirichlet ? gamma : 0.0);
    priors.alpha_h = alpha_h;
    priors.alpha0 = alpha0;
    priors.beta0 = beta0;

    amc::RngStream rng(g.seed);
    const auto c = amc::classify(amc::run_chain(block, set, priors, chain, rng));
    print_scores(set, c);
    return 0;
  }

  if (*orc) {
    const amc::ConstellationKind kinds[] = {amc::ConstellationKind::QPSK, amc::ConstellationKind::PSK8,
                                            amc::ConstellationKind::QAM16};
    const amc::ConstellationSet set(kinds);
    const amc::Priors priors = amc::Priors::uniform(set.num_members(), 1.0);
    std::size_t matched = 0;
    std::printf("%-4s %-24s %-24s %s\n", "inst", "oracle", "chain", "max|diff|");
    for (std::size_t i = 0; i < instances; ++i) {
      const auto fx = amc::make_oracle_fixture(set, g.seed, i, 4, orc_sigma2);
      const auto exact = amc::exact_posterior_oracle(fx.block, set, priors, fx.taps.taps, fx.sigma2);
      amc::RngStream rng(g.seed, 1000 + i);
      const auto c = amc::classify(amc::run_chain(fx.block, set, priors, amc::oracle_chain_config(fx, orc_samples, orc_burn), rng));
      double worst = 0;
      for (std::size_t a = 0; a < exact.size(); ++a) worst = std::max(worst, std::abs(exact[a] - c.scores[a]));
      matched += worst <= tolerance;
      std::printf("%-4zu %.4f %.4f %.4f      %.4f %.4f %.4f      %.4f%s\n", i, exact[0], exact[1], exact[2],
                  c.scores[0], c.scores[1], c.scores[2], worst, worst <= tolerance ? "" : "  MISMATCH");
    }
    std::printf("%zu / %zu instances within %.3f\n", matched, instances, tolerance);
    return 0;
  }

  if (*st) {
    std::size_t failed = 0;
    const auto results = amc::run_selftest(g.seed, [&](const amc::SelfTestResult& r) {
      std::printf("[%s] %-44s %7.2fs  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.seconds, r.detail.c_str());
      std::fflush(stdout);
      failed += !r.passed;
    });
    std::printf("%zu / %zu checks passed\n", results.size() - failed, results.size());
    return failed == 0 ? 0 : 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "amc: error: %s\n", e.what());
    return 1;
  }
}
