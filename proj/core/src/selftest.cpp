#include "amc/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

#include "amc/channel.hpp"
#include "amc/constellation.hpp"
#include "amc/gibbs.hpp"
#include "amc/harness.hpp"
#include "amc/random.hpp"

namespace amc {

namespace {

// A check returns an empty string on success, otherwise a failure message.
using Check = std::function<std::string(std::uint64_t)>;

constexpr ConstellationKind kAll[] = {ConstellationKind::QPSK, ConstellationKind::PSK8, ConstellationKind::QAM16};

template <typename... Args>
std::string msg(Args&&... args) {
  std::ostringstream os;
  os.precision(6);
  (os << ... << args);
  return os.str();
}

ReceivedBlock small_block(const ConstellationSet& set, std::size_t member, std::size_t N, std::size_t L,
                          double sigma2, RngStream& rng) {
  std::vector<double> profile(L, 0.0);
  return transmit(set.member(member), rayleigh_taps(profile, rng), sigma2, N, rng);
}

std::string check_normalization(std::uint64_t) {
  for (auto k : kAll) {
    const auto c = build_constellation(k);
    double p = 0;
    for (cplx x : c.points) p += std::norm(x);
    p /= static_cast<double>(c.size());
    if (std::abs(p - 1.0) > 1e-12) return msg(to_string(k), " average power ", p);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j)
        if (std::abs(c.points[i] - c.points[j]) <= kPointTolerance) return msg(to_string(k), " has repeated points");
  }
  return {};
}

std::string check_membership(std::uint64_t) {
  const std::vector<std::vector<ConstellationKind>> sets = {
      {ConstellationKind::QPSK, ConstellationKind::PSK8, ConstellationKind::QAM16},
      {ConstellationKind::QPSK, ConstellationKind::QAM16},
      {ConstellationKind::QPSK}};
  for (const auto& kinds : sets) {
    const ConstellationSet set(kinds);
    for (std::size_t p = 0; p < set.super_points().size(); ++p) {
      std::vector<int> expected;
      for (std::size_t a = 0; a < set.num_members(); ++a) {
        double best = 1e300;
        for (cplx q : set.member(a).points) best = std::min(best, std::abs(set.super_points()[p] - q));
        if (best <= kPointTolerance) expected.push_back(static_cast<int>(a));
      }
      if (expected.empty() || expected != set.membership()[p]) return msg("membership mismatch at point ", p);
    }
    for (std::size_t a = 0; a < set.num_members(); ++a)
      for (cplx q : set.member(a).points) {
        const auto hits = std::count_if(set.super_points().begin(), set.super_points().end(),
                                        [&](cplx v) { return std::abs(v - q) <= kPointTolerance; });
        if (hits != 1) return msg("member point appears ", hits, " times in super_points");
      }
  }
  return {};
}

std::string check_set_order(std::uint64_t) {
  std::vector<ConstellationKind> kinds(std::begin(kAll), std::end(kAll));
  const ConstellationSet ref(kinds);
  std::sort(kinds.begin(), kinds.end());
  do {
    const ConstellationSet other(kinds);
    if (other.super_points().size() != ref.super_points().size()) return "union size depends on order";
    for (std::size_t p = 0; p < ref.super_points().size(); ++p)
      if (std::abs(other.super_points()[p] - ref.super_points()[p]) > kPointTolerance)
        return "super_points content depends on order";
  } while (std::next_permutation(kinds.begin(), kinds.end()));
  return {};
}

std::string check_convolution(std::uint64_t seed) {
  RngStream rng(seed, 11);
  const std::size_t N = 12, L = 4;
  std::vector<cplx> x(N + L - 1), y(N + L - 1), h(L);
  for (auto& v : x) v = rng.cnormal();
  for (auto& v : y) v = rng.cnormal();
  for (auto& v : h) v = rng.cnormal();
  const cplx a{0.7, -1.2}, b{-0.3, 0.4};
  std::vector<cplx> mix(N + L - 1);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * x[i] + b * y[i];
  const CMatrix Sx = convolution_matrix(x, N, L), Sy = convolution_matrix(y, N, L), Sm = convolution_matrix(mix, N, L);
  if ((Sm - (a * Sx + b * Sy)).cwiseAbs().maxCoeff() > 1e-12) return "convolution matrix is not linear";

  for (std::size_t i = 0; i < x.size(); ++i) {
    auto z = x;
    z[i] += cplx{1.0, 1.0};
    const CMatrix Sz = convolution_matrix(z, N, L);
    const auto n = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(L - 1);
    for (std::size_t k = 0; k < N; ++k) {
      const bool inside = static_cast<std::ptrdiff_t>(k) >= n && static_cast<std::ptrdiff_t>(k) <= n + static_cast<std::ptrdiff_t>(L) - 1;
      const bool changed = (Sz.row(k) - Sx.row(k)).cwiseAbs().maxCoeff() > 0;
      if (inside != changed) return msg("changing s_", n, " affected row ", k, " unexpectedly");
    }
  }
  return {};
}

std::string check_noiseless(std::uint64_t seed) {
  RngStream rng(seed, 12);
  const auto c = build_constellation(ConstellationKind::QAM16);
  const double profile[] = {0.0, -3.0, -6.0};
  const auto block = transmit(c, rayleigh_taps(profile, rng), 0.0, 40, rng);
  const auto sh = convolve(block.truth->symbols, block.truth->taps.taps, block.length());
  for (std::size_t k = 0; k < sh.size(); ++k)
    if (std::abs(block.samples[k] - sh[k]) != 0.0) return "noiseless block has a non-zero residual";
  return {};
}

std::string check_two_path_integer(std::uint64_t seed) {
  const double delays[] = {0.0, 2.0}, powers[] = {0.0, -3.0};
  const std::size_t L = 5;
  RngStream a(seed, 13), b(seed, 13);
  const auto h = two_path_taps(delays, powers, 0.3, L, a);
  const double v0 = 1.0, v1 = std::pow(10.0, -0.3);
  const double norm = 1.0 / std::sqrt(v0 + v1);
  const cplx g0 = std::sqrt(v0) * b.cnormal(), g1 = std::sqrt(v1) * b.cnormal();
  const cplx expected[] = {norm * g0, 0.0, norm * g1, 0.0, 0.0};
  for (std::size_t k = 0; k < L; ++k)
    if (std::abs(h.taps[k] - expected[k]) > 1e-12) return msg("tap ", k, " differs from the path gain pattern");
  return {};
}

std::string check_replay(std::uint64_t seed) {
  RngStream a(seed, 21), b(seed, 21);
  const double conc[] = {0.5, 2.0, 7.0};
  const double w[] = {1.0, 0.0, 3.0};
  CMatrix cov(2, 2);
  cov << 2.0, 1.0, 1.0, 2.0;
  const CVector mean = CVector::Zero(2);
  for (int i = 0; i < 200; ++i) {
    if (sample_dirichlet(conc, a) != sample_dirichlet(conc, b)) return "dirichlet replay differs";
    if (sample_invgamma(3.0, 4.0, a) != sample_invgamma(3.0, 4.0, b)) return "invgamma replay differs";
    if (sample_categorical(w, a) != sample_categorical(w, b)) return "categorical replay differs";
    if (sample_cgauss(mean, cov, a) != sample_cgauss(mean, cov, b)) return "cgauss replay differs";
  }
  return {};
}

std::string check_log_shift(std::uint64_t seed) {
  const std::vector<double> lw = {-1.0, 0.5, -3.0, 2.0};
  std::vector<double> shifted = lw;
  for (double& v : shifted) v -= 1000.0;
  const auto p = normalize_log_weights(lw), q = normalize_log_weights(shifted);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (std::abs(p[i] - q[i]) > 1e-12) return "normalized weights depend on a common shift";
  RngStream a(seed, 22), b(seed, 22);
  for (int i = 0; i < 1000; ++i)
    if (sample_categorical_log(lw, a) != sample_categorical_log(shifted, b)) return "draws depend on a common shift";
  return {};
}

std::string check_chi_square(std::uint64_t seed) {
  RngStream rng(seed, 23);
  const double w[] = {1.0, 2.0, 3.0};
  const int n = 100000;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) ++counts[sample_categorical(w, rng)];
  double chi2 = 0;
  for (int i = 0; i < 3; ++i) {
    const double e = n * w[i] / 6.0;
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
  }
  // Upper 1e-3 quantile of chi-square with 2 degrees of freedom: -2 ln(1e-3).
  const double critical = -2.0 * std::log(1e-3);
  return chi2 < critical ? std::string{} : msg("chi2 = ", chi2, " >= ", critical);
}

std::string check_moments(std::uint64_t seed) {
  RngStream rng(seed, 24);
  const int n = 100000;
  const double g21[] = {2.0, 1.0}, g111[] = {1.0, 1.0, 1.0};
  double m21 = 0, m111[3] = {0, 0, 0}, ig = 0;
  for (int i = 0; i < n; ++i) {
    m21 += sample_dirichlet(g21, rng)[0];
    const auto d = sample_dirichlet(g111, rng);
    for (int k = 0; k < 3; ++k) m111[k] += d[k];
    ig += sample_invgamma(3.0, 4.0, rng);
  }
  m21 /= n;
  ig /= n;
  if (std::abs(m21 - 2.0 / 3.0) > 0.01) return msg("Dirichlet([2,1]) mean ", m21);
  for (double m : m111)
    if (std::abs(m / n - 1.0 / 3.0) > 0.01) return msg("Dirichlet([1,1,1]) mean ", m / n);
  if (std::abs(ig - 2.0) > 0.03 * 2.0) return msg("IG(3,4) mean ", ig);
  return {};
}

std::string check_incremental_residual(std::uint64_t seed) {
  const ConstellationSet set(kAll);
  RngStream rng(seed, 31);
  const auto block = small_block(set, 2, 60, 3, 0.05, rng);
  const Priors priors = Priors::uniform(3, 1.0);
  ChainConfig cfg;
  GibbsState state = initialize_state(block, set, priors, cfg, rng);
  double worst = 0;
  for (std::size_t sweep = 0; sweep < 10; ++sweep) {
    state.mixture = sample_mixture(state.labels, priors, rng);
    const auto L = static_cast<std::ptrdiff_t>(block.taps);
    for (std::ptrdiff_t n = -L + 1; n < static_cast<std::ptrdiff_t>(block.length()); ++n) {
      sample_symbol(n, state, block, set, 1.0, rng);
      const auto c = check_caches(state, block, set);
      worst = std::max({worst, c.residual_error, c.norm_error});
      if (!c.counts_match) return "label counts diverged from recount";
    }
    sample_channel(state, block, set, priors, rng);
    sample_noise_var(state, block, priors, rng);
  }
  if (worst > 1e-9) return msg("cached residual deviates by ", worst);

  // The chain's own periodic verification must also stay quiet.
  cfg.verify_every = 1;
  cfg.samples = 20;
  cfg.burn_in = 20;
  const auto result = run_chain(block, set, priors, cfg, rng);
  if (!result.all_states_valid) return "chain produced an invalid state";
  return {};
}

std::string check_conventional(std::uint64_t seed) {
  const ConstellationSet set(kAll);
  const Priors priors = Priors::uniform(3, 0.0);
  for (std::size_t chain = 0; chain < 10; ++chain) {
    RngStream rng(seed, 100 + chain);
    const auto block = small_block(set, 2, 50, 2, 0.01, rng);
    ChainConfig cfg;
    cfg.mode = SamplerMode::Conventional;
    cfg.initial_member = chain % 2;  // QPSK or 8-PSK; the truth is 16-QAM
    GibbsState state = initialize_state(block, set, priors, cfg, rng);
    for (std::size_t sweep = 0; sweep < 30; ++sweep) {
      gibbs_sweep(state, block, set, priors, cfg, sweep, rng);
      for (int a : state.labels)
        if (static_cast<std::size_t>(a) != *cfg.initial_member) return msg("chain ", chain, " changed constellation");
    }
  }
  return {};
}

std::string check_exact_conditional(std::uint64_t seed) {
  const ConstellationSet set(kAll);
  RngStream rng(seed, 41);
  const auto block = small_block(set, 1, 10, 2, 0.3, rng);
  const Priors priors = Priors::uniform(3, 1.0);
  ChainConfig cfg;
  const GibbsState frozen = initialize_state(block, set, priors, cfg, rng);
  const std::ptrdiff_t n = 3;
  const auto p = normalize_log_weights(symbol_pair_logweights(n, frozen, block, set, 1.0));

  const int draws = 100000;
  std::vector<double> freq(p.size(), 0.0);
  const auto& pairs = set.pairs();
  for (int i = 0; i < draws; ++i) {
    GibbsState s = frozen;
    const SymbolPair got = sample_symbol(n, s, block, set, 1.0, rng);
    for (std::size_t q = 0; q < pairs.size(); ++q)
      if (pairs[q].point == got.point && pairs[q].member == got.member) freq[q] += 1.0 / draws;
  }
  double tv = 0;
  for (std::size_t q = 0; q < p.size(); ++q) tv += 0.5 * std::abs(freq[q] - p[q]);
  return tv < 0.01 ? std::string{} : msg("total variation ", tv);
}

std::string check_mixture_mean(std::uint64_t seed) {
  RngStream rng(seed, 42);
  Priors priors = Priors::uniform(3, 1.0);
  priors.gamma = {0.5, 2.0, 1.0};
  const std::vector<int> labels = {0, 0, 2, 1, 0, 2, 2, 2};
  const auto c = count_labels(labels, 3);
  double total = 0;
  std::vector<double> conc(3);
  for (int a = 0; a < 3; ++a) total += (conc[a] = priors.gamma[a] + c[a]);
  const int n = 20000;
  std::vector<double> sum(3, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto d = sample_mixture(labels, priors, rng);
    for (int a = 0; a < 3; ++a) sum[a] += d[a];
  }
  for (int a = 0; a < 3; ++a) {
    const double mean = conc[a] / total;
    const double var = mean * (1 - mean) / (total + 1);
    const double se = std::sqrt(var / n);
    if (std::abs(sum[a] / n - mean) > 3 * se) return msg("component ", a, " mean ", sum[a] / n, " vs ", mean);
  }
  return {};
}

std::string check_classify_rules(std::uint64_t) {
  ChainResult r;
  r.members = 3;
  r.mixture_samples = {{1, 0, 0}, {0, 1, 0}};
  auto c = classify(r);
  if (c.estimate != 0 || c.scores != std::vector<double>{0.5, 0.5, 0.0}) return "tie not broken to lowest index";
  r.mixture_samples = {{0.2, 0.5, 0.3}, {0.1, 0.6, 0.3}};
  const auto base = classify(r).estimate;
  for (auto& m : r.mixture_samples)
    for (double& v : m) v *= 7.5;
  if (classify(r).estimate != base) return "argmax changed under positive scaling";
  return {};
}

std::string check_harness(std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.block_length = 20;
  cfg.snr_db = {5.0, 15.0};
  cfg.trials = 6;
  cfg.samples = 15;
  cfg.burn_in = 5;
  cfg.gamma = {1.0, 15.0};
  cfg.seed = seed;
  auto csv = [&](std::size_t workers) {
    SweepOptions opts;
    opts.workers = workers;
    const auto table = run_sweep(cfg, opts);
    std::ostringstream os;
    write_results(table, os);
    std::string out, line;
    std::istringstream is(os.str());
    while (std::getline(is, line)) out += line.substr(0, line.rfind(',')) + '\n';
    return std::make_pair(out, table);
  };
  const auto [one, table] = csv(1);
  const auto [three, unused] = csv(3);
  if (one != three) return "results depend on the worker count";
  for (const auto& row : table.rows) {
    const auto sum = std::accumulate(row.confusion.begin(), row.confusion.end(), std::size_t{0});
    if (sum != cfg.trials) return "confusion matrix does not sum to the trial count";
    std::size_t trace = 0;
    for (std::size_t a = 0; a < table.members; ++a) trace += row.confusion[a * table.members + a];
    if (std::abs(row.pcc - static_cast<double>(trace) / static_cast<double>(sum)) > 1e-15) return "pcc != trace/total";
    if (!(row.ci_lo <= row.pcc && row.pcc <= row.ci_hi && row.ci_lo >= 0 && row.ci_hi <= 1))
      return "Wilson interval does not bracket the estimate";
  }
  return {};
}

}  // namespace

std::vector<SelfTestResult> run_selftest(std::uint64_t seed,
                                         const std::function<void(const SelfTestResult&)>& on_result) {
  const std::pair<const char*, Check> checks[] = {
      {"constellations: unit power, distinct points", check_normalization},
      {"constellations: membership = brute force", check_membership},
      {"constellations: set is order-insensitive", check_set_order},
      {"channel: convolution linear and local", check_convolution},
      {"channel: noiseless block has zero residual", check_noiseless},
      {"channel: integer-delay two-path taps", check_two_path_integer},
      {"rand: replayed streams are bit-exact", check_replay},
      {"rand: log-categorical shift invariance", check_log_shift},
      {"rand: categorical chi-square [1,2,3]", check_chi_square},
      {"rand: Dirichlet and inverse-gamma moments", check_moments},
      {"gibbs: incremental residual = recompute", check_incremental_residual},
      {"gibbs: conventional sampler never switches", check_conventional},
      {"gibbs: single-site draws match weights", check_exact_conditional},
      {"gibbs: Dirichlet(gamma + c) posterior mean", check_mixture_mean},
      {"gibbs: classify tie rule and scaling", check_classify_rules},
      {"harness: worker invariance and aggregation", check_harness},
  };

  std::vector<SelfTestResult> out;
  for (const auto& [name, check] : checks) {
    SelfTestResult r;
    r.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      r.detail = check(seed);
      r.passed = r.detail.empty();
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
      r.passed = false;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (on_result) on_result(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace amc
