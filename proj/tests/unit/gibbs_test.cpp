#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "amc/channel.hpp"
#include "amc/constellation.hpp"
#include "amc/gibbs.hpp"

namespace amc {
namespace {

using K = ConstellationKind;
constexpr K kAll[] = {K::QPSK, K::PSK8, K::QAM16};
using Dense = std::vector<std::vector<cplx>>;

// Independent dense linear algebra for the channel-posterior oracle:
// Gauss-Jordan inversion with partial pivoting, no Eigen involved.
Dense invert(Dense a) {
  const std::size_t n = a.size();
  Dense inv(n, std::vector<cplx>(n));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(inv[col], inv[piv]);
    const cplx d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) {
      a[col][j] /= d;
      inv[col][j] /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const cplx f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) {
        a[r][j] -= f * a[col][j];
        inv[r][j] -= f * inv[col][j];
      }
    }
  }
  return inv;
}

struct DensePosterior {
  std::vector<cplx> mean;
  Dense cov;
};

// Sigma = (I/alpha + S^H S / sigma2)^-1, mean = Sigma S^H r / sigma2.
DensePosterior dense_channel_posterior(const Dense& S, const std::vector<cplx>& r, double sigma2, double alpha) {
  const std::size_t N = S.size(), L = S[0].size();
  Dense prec(L, std::vector<cplx>(L));
  std::vector<cplx> rhs(L);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < L; ++j) {
      cplx acc = 0;
      for (std::size_t k = 0; k < N; ++k) acc += std::conj(S[k][i]) * S[k][j];
      prec[i][j] = acc / sigma2 + (i == j ? 1.0 / alpha : 0.0);
    }
    cplx acc = 0;
    for (std::size_t k = 0; k < N; ++k) acc += std::conj(S[k][i]) * r[k];
    rhs[i] = acc / sigma2;
  }
  DensePosterior out;
  out.cov = invert(prec);
  out.mean.assign(L, 0.0);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) out.mean[i] += out.cov[i][j] * rhs[j];
  return out;
}

CMatrix to_eigen(const Dense& d) {
  CMatrix m(d.size(), d[0].size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d[0].size(); ++j) m(i, j) = d[i][j];
  return m;
}

const Dense kS = {{{0.7, 0.7}, {-0.7, 0.7}}, {{1.0, 0.0}, {0.7, 0.7}}, {{0.3, -0.9}, {1.0, 0.0}}, {{-0.4, 0.2}, {0.3, -0.9}}};
const std::vector<cplx> kR = {{0.5, 1.1}, {1.4, 0.2}, {0.9, -1.3}, {-0.1, -0.6}};

TEST(ChannelPosteriorTest, MatchesDenseInversionOracle) {
  Priors p = Priors::uniform(3, 1.0);
  p.alpha_h = 10.0;
  const auto got = channel_posterior_params(to_eigen(kS), kR, 0.5, p);
  const auto want = dense_channel_posterior(kS, kR, 0.5, 10.0);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(std::abs(got.mean(i) - want.mean[i]), 0.0, 1e-12);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(std::abs(got.cov(i, j) - want.cov[i][j]), 0.0, 1e-12);
  }
  EXPECT_NEAR((got.cov - got.cov.adjoint()).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(ChannelPosteriorTest, VaguePriorGivesLeastSquares) {
  Priors p = Priors::uniform(3, 1.0);
  p.alpha_h = 1e12;
  const auto got = channel_posterior_params(to_eigen(kS), kR, 0.5, p);
  // Least squares (S^H S)^-1 S^H r via the dense oracle with alpha -> infinity.
  const auto ls = dense_channel_posterior(kS, kR, 1.0, std::numeric_limits<double>::infinity());
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(std::abs(got.mean(i) - ls.mean[i]) / std::abs(ls.mean[i]), 0.0, 1e-6);
}

TEST(ChannelPosteriorTest, NoInformationLimit) {
  Priors p = Priors::uniform(3, 1.0);
  p.alpha_h = 10.0;
  const auto got = channel_posterior_params(to_eigen(kS), kR, 1e12, p);
  EXPECT_LT(got.mean.cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR((got.cov - 10.0 * CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() / 10.0, 0.0, 1e-6);
  EXPECT_THROW(channel_posterior_params(to_eigen(kS), kR, 0.0, p), std::invalid_argument);
}

// Fixture: a block with known truth and a state holding the true values.
struct Scenario {
  ConstellationSet set{kAll};
  ReceivedBlock block;
  GibbsState state;
};

Scenario make_scenario(std::size_t member, std::size_t N, std::vector<cplx> taps, double sigma2, std::uint64_t seed,
                       double state_sigma2 = -1) {
  Scenario sc;
  RngStream rng(seed);
  sc.block = transmit(sc.set.member(member), ChannelTaps{taps}, sigma2, N, rng);
  std::vector<int> points, labels;
  for (cplx s : sc.block.truth->symbols) {
    for (std::size_t p = 0; p < sc.set.super_points().size(); ++p)
      if (std::abs(sc.set.super_points()[p] - s) < 1e-12) points.push_back(static_cast<int>(p));
    labels.push_back(static_cast<int>(member));
  }
  sc.state = make_state(sc.block, sc.set, points, labels, taps, state_sigma2 > 0 ? state_sigma2 : std::max(sigma2, 1e-6),
                        std::vector<double>(3, 1.0 / 3));
  return sc;
}

TEST(SampleChannelTest, ConcentratedPosteriorReturnsMean) {
  auto sc = make_scenario(1, 200, {{0.9, 0.1}, {0.2, -0.3}}, 1e-10, 1, 1e-8);
  Priors p = Priors::uniform(3, 1.0);
  const CMatrix S = convolution_matrix(sc.state.symbols(sc.set), 200, 2);
  const auto post = channel_posterior_params(S, sc.block.samples, sc.state.sigma2, p);
  RngStream rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto h = sample_channel(sc.state, sc.block, sc.set, p, rng);
    for (int k = 0; k < 2; ++k) EXPECT_LT(std::abs(h.taps[k] - post.mean(k)), 1e-3);
  }
}

TEST(SampleChannelTest, MonteCarloMomentsMatchPosterior) {
  // Repeated symbols make the two taps strongly correlated a posteriori.
  auto sc = make_scenario(0, 6, {{0.8, 0.0}, {0.4, 0.3}}, 0.5, 3, 0.5);
  const int q = sc.set.member_points(0)[0];
  std::fill(sc.state.points.begin(), sc.state.points.end(), q);
  sc.state.points[3] = sc.set.member_points(0)[1];
  refresh_caches(sc.state, sc.block, sc.set);

  Priors p = Priors::uniform(3, 1.0);
  p.alpha_h = 10.0;
  const CMatrix S = convolution_matrix(sc.state.symbols(sc.set), 6, 2);
  const auto post = channel_posterior_params(S, sc.block.samples, 0.5, p);
  ASSERT_GT(std::abs(post.cov(0, 1)) / std::sqrt(post.cov(0, 0).real() * post.cov(1, 1).real()), 0.5);

  RngStream rng(4);
  const int n = 100000;
  CVector mean = CVector::Zero(2);
  CMatrix second = CMatrix::Zero(2, 2);
  for (int i = 0; i < n; ++i) {
    const auto h = sample_channel(sc.state, sc.block, sc.set, p, rng);
    const CVector x = Eigen::Map<const CVector>(h.taps.data(), 2);
    mean += x;
    second += (x - post.mean) * (x - post.mean).adjoint();
  }
  mean /= n;
  second /= n;
  for (int k = 0; k < 2; ++k) {
    const double se = std::sqrt(post.cov(k, k).real() / 2 / n);
    EXPECT_LT(std::abs(mean(k).real() - post.mean(k).real()), 3 * se);
    EXPECT_LT(std::abs(mean(k).imag() - post.mean(k).imag()), 3 * se);
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) EXPECT_LT(std::abs(second(i, j) - post.cov(i, j)), 0.05 * std::abs(post.cov(i, j)));
}

TEST(NoisePosteriorTest, ZeroResidualAndShape) {
  auto sc = make_scenario(2, 100, {{1.0, 0.0}}, 0.0, 5);
  Priors p = Priors::uniform(3, 1.0);
  p.alpha0 = 0.01;
  p.beta0 = 3.0;
  const CMatrix S = convolution_matrix(sc.block.truth->symbols, 100, 1);
  const auto np = noise_posterior_params(sc.block.samples, S, sc.block.truth->taps.taps, p);
  EXPECT_DOUBLE_EQ(np.shape, 100.01);
  EXPECT_NEAR(np.scale, 3.0, 1e-24);
}

TEST(NoisePosteriorTest, CachedResidualMatchesRecompute) {
  auto sc = make_scenario(1, 80, {{0.7, 0.1}, {0.3, 0.3}, {0.1, -0.2}}, 0.1, 6);
  Priors p = Priors::uniform(3, 1.0);
  ChainConfig cfg;
  RngStream rng(7);
  for (std::size_t sweep = 0; sweep < 20; ++sweep) {
    gibbs_sweep(sc.state, sc.block, sc.set, p, cfg, sweep, rng);
    const CMatrix S = convolution_matrix(sc.state.symbols(sc.set), 80, 3);
    const auto np = noise_posterior_params(sc.block.samples, S, sc.state.taps, p);
    EXPECT_NEAR(np.scale - p.beta0, sc.state.residual_norm2, 1e-9);
  }
}

TEST(SampleNoiseVarTest, RecoversTrueVarianceFromLargeBlock) {
  auto sc = make_scenario(2, 2000, {{0.8, 0.2}, {0.3, -0.1}}, 0.2, 8);
  Priors p = Priors::uniform(3, 1.0);
  RngStream rng(9);
  double m = 0;
  for (int i = 0; i < 2000; ++i) m += sample_noise_var(sc.state, sc.block, p, rng);
  EXPECT_NEAR(m / 2000 / 0.2, 1.0, 0.10);
}

TEST(SampleNoiseVarTest, PriorDominatedRegime) {
  auto sc = make_scenario(0, 100, {{1.0, 0.0}}, 0.01, 10);
  Priors p = Priors::uniform(3, 1.0);
  p.beta0 = 1e6;
  ASSERT_LT(sc.state.residual_norm2 / p.beta0, 1e-5);
  RngStream rng(11);
  double m = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) m += sample_noise_var(sc.state, sc.block, p, rng);
  EXPECT_NEAR(m / n / (p.beta0 / (p.alpha0 + 100 - 1)), 1.0, 0.02);
}

TEST(SampleNoiseVarTest, DeterministicUnderFixedStream) {
  auto sc = make_scenario(0, 50, {{1.0, 0.0}}, 0.1, 12);
  Priors p = Priors::uniform(3, 1.0);
  RngStream a(13), b(13);
  auto s2 = sc.state;
  EXPECT_EQ(sample_noise_var(sc.state, sc.block, p, a), sample_noise_var(s2, sc.block, p, b));
}

TEST(SymbolWeightsTest, OneHotMixtureRestrictsSupport) {
  auto sc = make_scenario(0, 10, {{1.0, 0.0}, {0.3, 0.1}}, 0.1, 14);
  sc.state.mixture = {1.0, 0.0, 0.0};
  const auto lw = symbol_pair_logweights(4, sc.state, sc.block, sc.set);
  std::set<int> support;
  for (std::size_t q = 0; q < lw.size(); ++q) {
    const auto& pr = sc.set.pairs()[q];
    if (pr.member != 0) {
      EXPECT_EQ(lw[q], -std::numeric_limits<double>::infinity());
    } else {
      EXPECT_TRUE(std::isfinite(lw[q]));
      support.insert(pr.point);
    }
  }
  const auto& qpsk = sc.set.member_points(0);
  EXPECT_EQ(support, std::set<int>(qpsk.begin(), qpsk.end()));
}

TEST(SymbolWeightsTest, InfiniteTemperatureGivesMixturePrior) {
  auto sc = make_scenario(2, 10, {{1.0, 0.0}, {0.3, 0.1}}, 0.1, 15);
  sc.state.mixture = {0.5, 0.2, 0.3};
  const auto p = normalize_log_weights(symbol_pair_logweights(2, sc.state, sc.block, sc.set, 1e12));
  std::vector<double> per_point(sc.set.super_points().size(), 0.0);
  for (std::size_t q = 0; q < p.size(); ++q) per_point[sc.set.pairs()[q].point] += p[q];
  for (std::size_t v = 0; v < per_point.size(); ++v) {
    double expected = 0;
    for (int a : sc.set.membership()[v]) expected += sc.state.mixture[a] / static_cast<double>(sc.set.member(a).size());
    EXPECT_NEAR(per_point[v], expected, 1e-9);
  }
}

// Brute-force the weight formula: substitute s_n = v, recompute S h over the
// whole block, and sum the squared residual over rows(n).
std::vector<double> brute_force_weights(std::ptrdiff_t n, const GibbsState& st, const ReceivedBlock& block,
                                        const ConstellationSet& set, double rho) {
  const std::size_t N = block.length(), L = block.taps;
  std::vector<double> out;
  for (const auto& pr : set.pairs()) {
    auto sym = st.symbols(set);
    sym[static_cast<std::size_t>(n + static_cast<std::ptrdiff_t>(L) - 1)] = set.super_points()[pr.point];
    const auto sh = convolve(sym, st.taps, N);
    double sq = 0;
    for (std::size_t k = 0; k < N; ++k) {
      const auto kk = static_cast<std::ptrdiff_t>(k);
      if (kk >= n && kk <= n + static_cast<std::ptrdiff_t>(L) - 1) sq += std::norm(block.samples[k] - sh[k]);
    }
    const double prior = st.mixture[pr.member] / static_cast<double>(set.member(pr.member).size());
    out.push_back((prior > 0 ? std::log(prior) : -std::numeric_limits<double>::infinity()) - sq / (rho * st.sigma2));
  }
  return out;
}

TEST(SymbolWeightsTest, QamOnlyPointWinsAtHighSnr) {
  Scenario sc;
  const int qam_point = sc.set.member_points(2)[5];
  sc.block.taps = 1;
  sc.block.samples = {sc.set.super_points()[0], sc.set.super_points()[qam_point], sc.set.super_points()[3]};
  sc.state = make_state(sc.block, sc.set, {0, 0, 0}, {sc.set.membership()[0][0], sc.set.membership()[0][0], sc.set.membership()[0][0]},
                        {cplx{1, 0}}, 0.01, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto lw = symbol_pair_logweights(1, sc.state, sc.block, sc.set);
  const auto bf = brute_force_weights(1, sc.state, sc.block, sc.set, 1.0);
  ASSERT_EQ(lw.size(), 28u);
  for (std::size_t q = 0; q < lw.size(); ++q) EXPECT_NEAR(lw[q], bf[q], 1e-9);
  const auto best = static_cast<std::size_t>(std::max_element(lw.begin(), lw.end()) - lw.begin());
  EXPECT_EQ(sc.set.pairs()[best].point, qam_point);
  EXPECT_EQ(sc.set.pairs()[best].member, 2);
}

TEST(SymbolWeightsTest, MatchesBruteForceAtEveryIndexIncludingEdges) {
  auto sc = make_scenario(1, 9, {{0.9, -0.2}, {0.4, 0.3}, {-0.2, 0.1}}, 0.2, 16, 0.3);
  RngStream rng(17);
  sc.state.mixture = {0.2, 0.5, 0.3};
  // Perturb the state away from truth so residuals are non-trivial.
  for (auto& p : sc.state.points) p = static_cast<int>(rng.uniform() * 24) % 24;
  for (std::size_t i = 0; i < sc.state.points.size(); ++i) sc.state.labels[i] = sc.set.membership()[sc.state.points[i]][0];
  refresh_caches(sc.state, sc.block, sc.set);
  for (std::ptrdiff_t n = -2; n <= 8; ++n) {
    const auto lw = symbol_pair_logweights(n, sc.state, sc.block, sc.set, 1.7);
    const auto bf = brute_force_weights(n, sc.state, sc.block, sc.set, 1.7);
    for (std::size_t q = 0; q < lw.size(); ++q) EXPECT_NEAR(lw[q], bf[q], 1e-9) << "n=" << n << " q=" << q;
  }
  EXPECT_THROW(symbol_pair_logweights(-3, sc.state, sc.block, sc.set), std::out_of_range);
  EXPECT_THROW(symbol_pair_logweights(9, sc.state, sc.block, sc.set), std::out_of_range);
}

TEST(SampleSymbolTest, ConcentratesOnTrueSymbolAtHighSnr) {
  auto sc = make_scenario(2, 30, {{0.9, 0.3}, {0.2, -0.1}}, 1e-6, 18, 1e-4);
  RngStream rng(19);
  const std::ptrdiff_t n = 12;
  const int truth = sc.state.points[13];
  int hits = 0;
  for (int i = 0; i < 1000; ++i) {
    GibbsState s = sc.state;
    hits += sample_symbol(n, s, sc.block, sc.set, 1.0, rng).point == truth;
  }
  EXPECT_GT(hits, 999 - 1);
}

TEST(SampleSymbolTest, SymmetricPairIsFiftyFifty) {
  Scenario sc;
  const auto& qpsk = sc.set.member_points(0);
  const cplx a = sc.set.super_points()[qpsk[0]], b = sc.set.super_points()[qpsk[1]];
  sc.block.taps = 1;
  sc.block.samples = {a, 0.5 * (a + b), a};
  sc.state = make_state(sc.block, sc.set, {qpsk[0], qpsk[0], qpsk[0]}, {0, 0, 0}, {cplx{1, 0}}, 0.05, {1.0, 0.0, 0.0});
  RngStream rng(20);
  int first = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    GibbsState s = sc.state;
    const auto pr = sample_symbol(1, s, sc.block, sc.set, 1.0, rng);
    ASSERT_TRUE(pr.point == qpsk[0] || pr.point == qpsk[1]);
    first += pr.point == qpsk[0];
  }
  EXPECT_NEAR(static_cast<double>(first) / n, 0.5, 0.02);
}

TEST(SampleSymbolTest, CachesStayExactAfterEveryDraw) {
  auto sc = make_scenario(2, 40, {{0.7, 0.4}, {0.3, -0.2}, {0.2, 0.2}}, 0.05, 21, 0.5);
  RngStream rng(22);
  for (int rep = 0; rep < 5; ++rep)
    for (std::ptrdiff_t n = -2; n < 40; ++n) {
      sample_symbol(n, sc.state, sc.block, sc.set, 1.0, rng);
      const auto c = check_caches(sc.state, sc.block, sc.set);
      ASSERT_LT(c.residual_error, 1e-9);
      ASSERT_LT(c.norm_error, 1e-9);
      ASSERT_TRUE(c.counts_match);
    }
}

TEST(CountLabelsTest, Basics) {
  EXPECT_EQ(count_labels(std::vector<int>{0, 0, 2}, 3), (std::vector<int>{2, 0, 1}));
  EXPECT_EQ(count_labels(std::vector<int>(7, 1), 3), (std::vector<int>{0, 7, 0}));
  EXPECT_THROW(count_labels(std::vector<int>{3}, 3), std::out_of_range);
}

TEST(SampleMixtureTest, PosteriorMean) {
  RngStream rng(23);
  const Priors p = Priors::uniform(3, 1.0);
  const std::vector<int> labels = {0, 0, 2};
  const int n = 100000;
  std::vector<double> m(3, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto d = sample_mixture(labels, p, rng);
    for (int a = 0; a < 3; ++a) m[a] += d[a];
  }
  EXPECT_NEAR(m[0] / n, 0.5, 0.01);
  EXPECT_NEAR(m[1] / n, 1.0 / 6, 0.01);
  EXPECT_NEAR(m[2] / n, 1.0 / 3, 0.01);
}

TEST(SampleMixtureTest, HugeConcentrationIsNearUniform) {
  RngStream rng(24);
  const Priors p = Priors::uniform(3, 1e6);
  const auto d = sample_mixture(std::vector<int>(50, 2), p, rng);
  for (double v : d) EXPECT_NEAR(v, 1.0 / 3, 0.01);
}

TEST(SuperconstellationTest, NormalizedCounts) {
  const auto p = superconstellation_update(std::vector<int>{0, 0, 2}, 3);
  EXPECT_NEAR(p[0], 2.0 / 3, 1e-15);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_NEAR(p[2], 1.0 / 3, 1e-15);
  EXPECT_EQ(superconstellation_update(std::vector<int>{1, 1}, 3), (std::vector<double>{0, 1, 0}));
  EXPECT_THROW(superconstellation_update(std::vector<int>{}, 3), std::invalid_argument);
}

TEST(SuperconstellationTest, ChainUsesDeterministicCountRule) {
  auto sc = make_scenario(1, 40, {{0.9, 0.1}, {0.3, 0.2}}, 0.05, 25);
  ChainConfig cfg;
  cfg.mode = SamplerMode::Superconstellation;
  cfg.samples = 30;
  cfg.burn_in = 0;
  RngStream rng(26);
  const auto res = run_chain(sc.block, sc.set, Priors::uniform(3, 0.0), cfg, rng);
  for (std::size_t i = 1; i < res.mixture_samples.size(); ++i) {
    const auto& c = res.label_count_samples[i - 1];
    const double total = std::accumulate(c.begin(), c.end(), 0.0);
    for (int a = 0; a < 3; ++a) EXPECT_DOUBLE_EQ(res.mixture_samples[i][a], c[a] / total);
  }
}

TEST(GibbsSweepTest, ConventionalModeNeverLeavesInitialConstellation) {
  const ConstellationSet set(kAll);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed);
    const auto block = transmit(set.member(2), ChannelTaps{{{0.8, 0.1}, {0.3, -0.2}}}, 0.01, 60, rng);
    ChainConfig cfg;
    cfg.mode = SamplerMode::Conventional;
    cfg.initial_member = 0;
    const Priors p = Priors::uniform(3, 0.0);
    GibbsState st = initialize_state(block, set, p, cfg, rng);
    for (std::size_t sweep = 0; sweep < 40; ++sweep) {
      gibbs_sweep(st, block, set, p, cfg, sweep, rng);
      ASSERT_EQ(st.counts[0], static_cast<int>(block.num_symbols()));
    }
  }
}

TEST(GibbsSweepTest, ConventionalModeCanDropFromSupersetToSubset) {
  // Every QPSK point is an 8-PSK point, so once all symbols sit on QPSK points
  // the exact constellation conditional favours QPSK by 2^(N+L-1).
  const ConstellationSet set(kAll);
  RngStream rng(40);
  const auto block = transmit(set.member(0), ChannelTaps{{cplx{1.0, 0.0}}}, 1e-4, 30, rng);
  ChainConfig cfg;
  cfg.mode = SamplerMode::Conventional;
  cfg.initial_member = 1;
  const Priors p = Priors::uniform(3, 0.0);
  GibbsState st = initialize_state(block, set, p, cfg, rng);
  for (std::size_t sweep = 0; sweep < 50; ++sweep) gibbs_sweep(st, block, set, p, cfg, sweep, rng);
  EXPECT_EQ(st.counts[0], 30);
}

TEST(GibbsSweepTest, LatentDirichletEscapesWrongInitialization) {
  const ConstellationSet set(kAll);
  const double profile[] = {0.0, -0.9, -4.9};
  const Priors p = Priors::uniform(3, 15.0);
  int escaped = 0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    RngStream rng(1000 + trial);
    const std::size_t truth = trial % 3;
    const auto block = transmit(set.member(truth), rayleigh_taps(profile, rng), snr_db_to_sigma2(15.0), 100, rng);
    ChainConfig cfg;
    cfg.initial_member = (truth + 1) % 3;
    escaped += classify(run_chain(block, set, p, cfg, rng)).estimate == truth;
  }
  EXPECT_GE(escaped, 40);
}

TEST(GibbsSweepTest, DeterministicGivenStream) {
  auto sc = make_scenario(0, 30, {{1.0, 0.0}, {0.2, 0.2}}, 0.1, 27);
  auto copy = sc.state;
  ChainConfig cfg;
  const Priors p = Priors::uniform(3, 2.0);
  RngStream a(28), b(28);
  gibbs_sweep(sc.state, sc.block, sc.set, p, cfg, 0, a);
  gibbs_sweep(copy, sc.block, sc.set, p, cfg, 0, b);
  EXPECT_EQ(sc.state.points, copy.points);
  EXPECT_EQ(sc.state.labels, copy.labels);
  EXPECT_EQ(sc.state.taps, copy.taps);
  EXPECT_EQ(sc.state.sigma2, copy.sigma2);
  EXPECT_EQ(sc.state.mixture, copy.mixture);
  EXPECT_TRUE(state_valid(sc.state, sc.block, sc.set));
}

TEST(AnnealTest, Schedules) {
  AnnealingSchedule none;
  for (std::size_t i : {0u, 5u, 1000u}) EXPECT_EQ(anneal_temperature(none, i), 1.0);

  for (auto kind : {AnnealingKind::Linear, AnnealingKind::Logarithmic}) {
    AnnealingSchedule s{kind, 10.0, 100};
    EXPECT_DOUBLE_EQ(anneal_temperature(s, 0), 10.0);
    EXPECT_DOUBLE_EQ(anneal_temperature(s, 100), 1.0);
    EXPECT_DOUBLE_EQ(anneal_temperature(s, 500), 1.0);
    double prev = anneal_temperature(s, 0);
    for (std::size_t i = 1; i <= 120; ++i) {
      const double t = anneal_temperature(s, i);
      EXPECT_LE(t, prev);
      EXPECT_GE(t, 1.0);
      prev = t;
    }
  }
}

TEST(RunChainTest, RetainsSamplesAfterBurnIn) {
  auto sc = make_scenario(2, 30, {{1.0, 0.0}, {0.2, 0.2}}, 0.05, 29);
  ChainConfig cfg;
  RngStream rng(30);
  const auto res = run_chain(sc.block, sc.set, Priors::uniform(3, 15.0), cfg, rng);
  EXPECT_EQ(res.mixture_samples.size(), 300u);
  EXPECT_EQ(res.label_count_samples.size(), 300u);
  EXPECT_EQ(res.loglik_trace.size(), 400u);
  EXPECT_TRUE(res.all_states_valid);
}

TEST(RunChainTest, SingleSweepEqualsManualSweep) {
  auto sc = make_scenario(1, 20, {{1.0, 0.0}}, 0.05, 31);
  ChainConfig cfg;
  cfg.samples = 1;
  cfg.burn_in = 0;
  const Priors p = Priors::uniform(3, 1.0);
  RngStream a(32), b(32);
  const auto res = run_chain(sc.block, sc.set, p, cfg, a);
  GibbsState st = initialize_state(sc.block, sc.set, p, cfg, b);
  gibbs_sweep(st, sc.block, sc.set, p, cfg, 0, b);
  ASSERT_EQ(res.mixture_samples.size(), 1u);
  EXPECT_EQ(res.mixture_samples[0], st.mixture);
  EXPECT_EQ(res.label_count_samples[0], st.counts);
  EXPECT_EQ(res.final_state.points, st.points);
}

TEST(RunChainTest, IdenticalSeedsIdenticalResults) {
  auto sc = make_scenario(0, 30, {{0.7, 0.3}, {0.2, 0.1}}, 0.05, 33);
  ChainConfig cfg;
  cfg.samples = 50;
  cfg.burn_in = 20;
  cfg.annealing = {AnnealingKind::Linear, 5.0, 0};
  const Priors p = Priors::uniform(3, 15.0);
  RngStream a(34), b(34);
  const auto x = run_chain(sc.block, sc.set, p, cfg, a);
  const auto y = run_chain(sc.block, sc.set, p, cfg, b);
  EXPECT_EQ(x.mixture_samples, y.mixture_samples);
  EXPECT_EQ(x.label_count_samples, y.label_count_samples);
  EXPECT_EQ(x.loglik_trace, y.loglik_trace);
}

TEST(RunChainTest, RejectsBadConfiguration) {
  auto sc = make_scenario(0, 10, {{1.0, 0.0}}, 0.05, 35);
  RngStream rng(36);
  ChainConfig cfg;
  cfg.samples = 0;
  EXPECT_THROW(run_chain(sc.block, sc.set, Priors::uniform(3, 1.0), cfg, rng), std::invalid_argument);
  cfg.samples = 1;
  EXPECT_THROW(run_chain(sc.block, sc.set, Priors::uniform(3, 0.0), cfg, rng), std::invalid_argument);
  cfg.annealing = {AnnealingKind::Linear, 0.5, 0};
  EXPECT_THROW(run_chain(sc.block, sc.set, Priors::uniform(3, 1.0), cfg, rng), std::invalid_argument);
}

TEST(ClassifyTest, MeanAndTieRule) {
  ChainResult r;
  r.mixture_samples = std::vector<std::vector<double>>(4, {0.8, 0.1, 0.1});
  auto c = classify(r);
  EXPECT_EQ(c.estimate, 0u);
  for (int a = 0; a < 3; ++a) EXPECT_NEAR(c.scores[a], r.mixture_samples[0][a], 1e-15);

  r.mixture_samples = {{1, 0, 0}, {0, 1, 0}};
  c = classify(r);
  EXPECT_EQ(c.scores, (std::vector<double>{0.5, 0.5, 0.0}));
  EXPECT_EQ(c.estimate, 0u);

  r.mixture_samples.clear();
  EXPECT_THROW(classify(r), std::invalid_argument);
}

TEST(ClassifyTest, ArgmaxInvariantUnderPositiveScaling) {
  RngStream rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    ChainResult r;
    for (int m = 0; m < 5; ++m) r.mixture_samples.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
    const auto before = classify(r).estimate;
    const double k = 0.01 + 100 * rng.uniform();
    for (auto& m : r.mixture_samples)
      for (double& v : m) v *= k;
    EXPECT_EQ(classify(r).estimate, before);
  }
}

}  // namespace
}  // namespace amc
