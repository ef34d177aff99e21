#include "amc/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace amc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct SymbolWorkspace {
  std::vector<double> point_loglik;
  std::vector<double> label_logprior;
  std::vector<double> pair_logw;
  std::vector<double> scratch;

  explicit SymbolWorkspace(const ConstellationSet& set)
      : point_loglik(set.super_points().size()),
        label_logprior(set.num_members()),
        pair_logw(set.pairs().size()),
        scratch(set.pairs().size()) {}
};

struct RowRange {
  std::size_t first;
  std::size_t last;  // inclusive; empty when first > last
};

// Rows k of S that contain s_n: max(0, n) <= k <= min(N-1, n+L-1).
RowRange rows_of(std::ptrdiff_t n, std::size_t N, std::size_t L) {
  const auto lo = std::max<std::ptrdiff_t>(0, n);
  const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(N) - 1, n + static_cast<std::ptrdiff_t>(L) - 1);
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

std::size_t storage_index(std::ptrdiff_t n, std::size_t L) {
  return static_cast<std::size_t>(n + static_cast<std::ptrdiff_t>(L) - 1);
}

void check_time_index(std::ptrdiff_t n, const ReceivedBlock& block) {
  const auto L = static_cast<std::ptrdiff_t>(block.taps);
  const auto N = static_cast<std::ptrdiff_t>(block.length());
  if (n < -L + 1 || n > N - 1) throw std::out_of_range("symbol index " + std::to_string(n) + " outside [-L+1, N-1]");
}

void fill_pair_logweights(std::ptrdiff_t n, const GibbsState& state, const ReceivedBlock& block,
                          const ConstellationSet& set, double temperature, SymbolWorkspace& ws) {
  const std::size_t N = block.length();
  const std::size_t L = block.taps;
  const auto& super = set.super_points();
  const cplx current = super[state.points[storage_index(n, L)]];

  // sum_k |e_k - g_k d|^2 = A - 2 Re(conj(d) B) + |d|^2 G  with
  // e = cached residual, g_k = h[k - n], d = v - s_n.
  double A = 0, G = 0;
  cplx B{};
  const RowRange rows = rows_of(n, N, L);
  for (std::size_t k = rows.first; k <= rows.last && rows.first <= rows.last; ++k) {
    const cplx e = state.residual[k];
    const cplx g = state.taps[k - static_cast<std::size_t>(n)];
    A += std::norm(e);
    B += std::conj(g) * e;
    G += std::norm(g);
  }
  const double inv_var = 1.0 / (temperature * state.sigma2);
  for (std::size_t p = 0; p < super.size(); ++p) {
    const cplx d = super[p] - current;
    const double sq = std::max(0.0, A - 2.0 * (std::conj(d) * B).real() + std::norm(d) * G);
    ws.point_loglik[p] = -sq * inv_var;
  }

  for (std::size_t a = 0; a < set.num_members(); ++a) {
    const double w = state.mixture[a];
    ws.label_logprior[a] = w > 0 ? std::log(w) - std::log(static_cast<double>(set.member(a).size())) : kNegInf;
  }

  const auto& pairs = set.pairs();
  for (std::size_t q = 0; q < pairs.size(); ++q)
    ws.pair_logw[q] = ws.label_logprior[pairs[q].member] + ws.point_loglik[pairs[q].point];
}

SymbolPair draw_symbol(std::ptrdiff_t n, GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set,
                       double temperature, RngStream& rng, SymbolWorkspace& ws) {
  fill_pair_logweights(n, state, block, set, temperature, ws);
  const std::size_t q = sample_categorical_log(ws.pair_logw, ws.scratch, rng);
  const SymbolPair chosen = set.pairs()[q];

  const std::size_t L = block.taps;
  const std::size_t i = storage_index(n, L);
  const cplx d = set.super_points()[chosen.point] - set.super_points()[state.points[i]];
  if (d != cplx{}) {
    const RowRange rows = rows_of(n, block.length(), L);
    double delta_norm = 0;
    for (std::size_t k = rows.first; k <= rows.last && rows.first <= rows.last; ++k) {
      const cplx before = state.residual[k];
      const cplx after = before - state.taps[k - static_cast<std::size_t>(n)] * d;
      delta_norm += std::norm(after) - std::norm(before);
      state.residual[k] = after;
    }
    state.residual_norm2 += delta_norm;
  }
  --state.counts[state.labels[i]];
  ++state.counts[chosen.member];
  state.points[i] = chosen.point;
  state.labels[i] = chosen.member;
  return chosen;
}

AnnealingSchedule effective_schedule(const ChainConfig& config) {
  AnnealingSchedule s = config.annealing;
  if (s.cooling_sweeps == 0) s.cooling_sweeps = config.burn_in;
  return s;
}

// P(A = a | s) for the conventional sampler: uniform prior times
// prod_n 1(s_n in a) / |a|.
void conventional_constellation_update(GibbsState& state, const ConstellationSet& set, RngStream& rng) {
  const std::size_t K = set.num_members();
  std::vector<double> logw(K);
  for (std::size_t a = 0; a < K; ++a) {
    bool all_in = true;
    for (int p : state.points)
      if (!set.contains(static_cast<std::size_t>(p), a)) {
        all_in = false;
        break;
      }
    logw[a] = all_in ? -static_cast<double>(state.points.size()) * std::log(static_cast<double>(set.member(a).size()))
                     : kNegInf;
  }
  const std::size_t chosen = sample_categorical_log(logw, rng);
  std::fill(state.mixture.begin(), state.mixture.end(), 0.0);
  state.mixture[chosen] = 1.0;
  std::fill(state.labels.begin(), state.labels.end(), static_cast<int>(chosen));
  std::fill(state.counts.begin(), state.counts.end(), 0);
  state.counts[chosen] = static_cast<int>(state.labels.size());
}

std::vector<cplx> recompute_residual(const GibbsState& state, const ReceivedBlock& block,
                                     const ConstellationSet& set) {
  const auto sr = convolve(state.symbols(set), state.taps, block.length());
  std::vector<cplx> res(block.length());
  for (std::size_t k = 0; k < res.size(); ++k) res[k] = block.samples[k] - sr[k];
  return res;
}

}  // namespace

// --- configuration ----------------------------------------------------------

Priors Priors::uniform(std::size_t members, double gamma_value) {
  Priors p;
  p.gamma.assign(members, gamma_value);
  return p;
}

void Priors::validate(std::size_t members, bool allow_zero_gamma) const {
  if (gamma.size() != members)
    throw std::invalid_argument("priors: gamma has " + std::to_string(gamma.size()) + " entries, expected " +
                                std::to_string(members));
  for (double g : gamma) {
    if (!std::isfinite(g) || g < 0) throw std::invalid_argument("priors: gamma entries must be finite and >= 0");
    if (g == 0 && !allow_zero_gamma) throw std::invalid_argument("priors: gamma entries must be > 0");
  }
  if (!(alpha_h > 0)) throw std::invalid_argument("priors: alpha_h must be > 0");
  if (!(alpha0 > 0)) throw std::invalid_argument("priors: alpha0 must be > 0");
  if (!(beta0 > 0)) throw std::invalid_argument("priors: beta0 must be > 0");
}

std::string_view to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::LatentDirichlet: return "latent-dirichlet";
    case SamplerMode::Superconstellation: return "superconstellation";
    case SamplerMode::Conventional: return "conventional";
  }
  throw std::invalid_argument("unknown sampler mode");
}

SamplerMode parse_sampler_mode(std::string_view label) {
  if (label == "latent-dirichlet") return SamplerMode::LatentDirichlet;
  if (label == "superconstellation") return SamplerMode::Superconstellation;
  if (label == "conventional") return SamplerMode::Conventional;
  throw std::invalid_argument("unknown sampler mode '" + std::string(label) + "'");
}

std::string_view to_string(AnnealingKind kind) {
  switch (kind) {
    case AnnealingKind::None: return "none";
    case AnnealingKind::Linear: return "linear";
    case AnnealingKind::Logarithmic: return "logarithmic";
  }
  throw std::invalid_argument("unknown annealing kind");
}

AnnealingKind parse_annealing_kind(std::string_view label) {
  if (label == "none") return AnnealingKind::None;
  if (label == "linear") return AnnealingKind::Linear;
  if (label == "logarithmic") return AnnealingKind::Logarithmic;
  throw std::invalid_argument("unknown annealing schedule '" + std::string(label) + "'");
}

double anneal_temperature(const AnnealingSchedule& schedule, std::size_t sweep_index) {
  if (schedule.kind == AnnealingKind::None || sweep_index >= schedule.cooling_sweeps) return 1.0;
  const double rho0 = schedule.rho0;
  const auto i = static_cast<double>(sweep_index);
  const auto end = static_cast<double>(schedule.cooling_sweeps);
  if (schedule.kind == AnnealingKind::Linear) {
    const double slope = (rho0 - 1.0) / end;
    return std::max(1.0, rho0 - slope * i);
  }
  // Logarithmic cooling pinned to rho(0) = rho0 and rho(end) = 1.
  const double frac = std::log1p(i) / std::log1p(end);
  return std::max(1.0, 1.0 + (rho0 - 1.0) * (1.0 - frac));
}

void ChainConfig::validate() const {
  if (samples < 1) throw std::invalid_argument("chain: samples (M) must be >= 1");
  if (annealing.kind != AnnealingKind::None && !(annealing.rho0 >= 1.0))
    throw std::invalid_argument("chain: initial temperature must be >= 1");
  if (fixed_sigma2 && !(*fixed_sigma2 > 0)) throw std::invalid_argument("chain: fixed sigma2 must be > 0");
  if (initial_tap_variance && !(*initial_tap_variance > 0))
    throw std::invalid_argument("chain: initial tap variance must be > 0");
}

// --- state ------------------------------------------------------------------

std::vector<cplx> GibbsState::symbols(const ConstellationSet& set) const {
  std::vector<cplx> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = set.super_points()[points[i]];
  return out;
}

bool state_valid(const GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set) {
  const std::size_t ns = block.num_symbols();
  if (state.points.size() != ns || state.labels.size() != ns) return false;
  if (state.taps.size() != block.taps || state.residual.size() != block.length()) return false;
  if (state.mixture.size() != set.num_members() || state.counts.size() != set.num_members()) return false;
  for (std::size_t i = 0; i < ns; ++i) {
    const int p = state.points[i];
    const int a = state.labels[i];
    if (p < 0 || static_cast<std::size_t>(p) >= set.super_points().size()) return false;
    if (a < 0 || static_cast<std::size_t>(a) >= set.num_members()) return false;
    if (!set.contains(static_cast<std::size_t>(p), static_cast<std::size_t>(a))) return false;
  }
  double total = 0;
  for (double w : state.mixture) {
    if (!(w >= 0) || !std::isfinite(w)) return false;
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) return false;
  return state.sigma2 > 0 && std::isfinite(state.sigma2);
}

void refresh_caches(GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set) {
  state.residual = recompute_residual(state, block, set);
  state.residual_norm2 = 0;
  for (cplx e : state.residual) state.residual_norm2 += std::norm(e);
  state.counts = count_labels(state.labels, set.num_members());
}

CacheCheck check_caches(const GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set) {
  CacheCheck out;
  const auto fresh = recompute_residual(state, block, set);
  double norm = 0;
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    out.residual_error = std::max(out.residual_error, std::abs(fresh[k] - state.residual[k]));
    norm += std::norm(fresh[k]);
  }
  out.norm_error = std::abs(norm - state.residual_norm2);
  out.counts_match = count_labels(state.labels, set.num_members()) == state.counts;
  return out;
}

GibbsState make_state(const ReceivedBlock& block, const ConstellationSet& set, std::vector<int> points,
                      std::vector<int> labels, std::vector<cplx> taps, double sigma2, std::vector<double> mixture) {
  GibbsState s;
  s.points = std::move(points);
  s.labels = std::move(labels);
  s.taps = std::move(taps);
  s.sigma2 = sigma2;
  s.mixture = std::move(mixture);
  if (s.points.size() != block.num_symbols() || s.labels.size() != block.num_symbols() ||
      s.taps.size() != block.taps)
    throw std::invalid_argument("make_state: shape does not match the block");
  refresh_caches(s, block, set);
  return s;
}

GibbsState initialize_state(const ReceivedBlock& block, const ConstellationSet& set, const Priors& priors,
                            const ChainConfig& config, RngStream& rng) {
  const std::size_t K = set.num_members();
  const std::size_t ns = block.num_symbols();
  GibbsState s;

  if (config.initial_member) {
    const std::size_t a = *config.initial_member;
    if (a >= K) throw std::invalid_argument("initial member index out of range");
    s.mixture.assign(K, 0.0);
    s.mixture[a] = 1.0;
  } else if (config.mode == SamplerMode::LatentDirichlet) {
    s.mixture = sample_dirichlet(priors.gamma, rng);
  } else if (config.mode == SamplerMode::Superconstellation) {
    s.mixture.assign(K, 1.0 / static_cast<double>(K));
  } else {
    const std::vector<double> flat(K, 1.0);
    s.mixture.assign(K, 0.0);
    s.mixture[sample_categorical(flat, rng)] = 1.0;
  }

  s.points.resize(ns);
  s.labels.resize(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const auto a = sample_categorical(s.mixture, rng);
    const auto& pts = set.member_points(a);
    auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(pts.size()));
    j = std::min(j, pts.size() - 1);
    s.labels[i] = static_cast<int>(a);
    s.points[i] = pts[j];
  }

  if (config.fixed_taps) {
    if (config.fixed_taps->length() != block.taps) throw std::invalid_argument("fixed taps have the wrong length");
    s.taps = config.fixed_taps->taps;
  } else {
    const double var = config.initial_tap_variance.value_or(1.0 / static_cast<double>(block.taps));
    const double sd = std::sqrt(var);
    s.taps.resize(block.taps);
    for (auto& h : s.taps) h = sd * rng.cnormal();
  }

  if (config.fixed_sigma2) {
    s.sigma2 = *config.fixed_sigma2;
  } else {
    double power = 0;
    for (cplx r : block.samples) power += std::norm(r);
    s.sigma2 = std::max(power / static_cast<double>(block.length()), 1e-12);
  }

  refresh_caches(s, block, set);
  return s;
}

// --- channel / noise --------------------------------------------------------

ChannelPosterior channel_posterior_params(const CMatrix& S, std::span<const cplx> r, double sigma2,
                                          const Priors& priors) {
  if (!(sigma2 > 0)) throw std::invalid_argument("channel_posterior_params: sigma2 must be > 0");
  if (static_cast<std::size_t>(S.rows()) != r.size())
    throw std::invalid_argument("channel_posterior_params: S and r disagree on N");
  const Eigen::Index L = S.cols();
  const Eigen::Map<const CVector> rv(r.data(), static_cast<Eigen::Index>(r.size()));

  CMatrix precision = S.adjoint() * S / sigma2;
  precision.diagonal().array() += 1.0 / priors.alpha_h;
  const CVector rhs = S.adjoint() * rv / sigma2;

  const CMatrix eye = CMatrix::Identity(L, L);
  for (double jitter : {0.0, 1e-12, 1e-11, 1e-10}) {
    CMatrix p = precision;
    p.diagonal().array() += jitter;
    Eigen::LLT<CMatrix> llt(p);
    if (llt.info() != Eigen::Success) continue;
    ChannelPosterior out;
    out.cov = llt.solve(eye);
    out.cov = (0.5 * (out.cov + out.cov.adjoint())).eval();
    out.mean = out.cov * rhs;
    return out;
  }
  throw std::domain_error("channel_posterior_params: posterior precision is singular");
}

ChannelTaps sample_channel(GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set,
                           const Priors& priors, RngStream& rng, double temperature) {
  const CMatrix S = convolution_matrix(state.symbols(set), block.length(), block.taps);
  const auto post = channel_posterior_params(S, block.samples, temperature * state.sigma2, priors);
  const CVector h = sample_cgauss(post.mean, post.cov, rng);
  state.taps.assign(h.data(), h.data() + h.size());

  // New taps invalidate every row; rebuild the residual directly from S.
  const Eigen::Map<const CVector> rv(block.samples.data(), static_cast<Eigen::Index>(block.length()));
  const CVector res = rv - S * h;
  state.residual.assign(res.data(), res.data() + res.size());
  state.residual_norm2 = res.squaredNorm();
  return ChannelTaps{state.taps};
}

NoisePosterior noise_posterior_params(std::span<const cplx> r, const CMatrix& S, std::span<const cplx> h,
                                      const Priors& priors) {
  if (static_cast<std::size_t>(S.rows()) != r.size() || static_cast<std::size_t>(S.cols()) != h.size())
    throw std::invalid_argument("noise_posterior_params: dimension mismatch");
  const Eigen::Map<const CVector> rv(r.data(), static_cast<Eigen::Index>(r.size()));
  const Eigen::Map<const CVector> hv(h.data(), static_cast<Eigen::Index>(h.size()));
  const double rss = (rv - S * hv).squaredNorm();
  return {priors.alpha0 + static_cast<double>(r.size()), priors.beta0 + rss};
}

double sample_noise_var(GibbsState& state, const ReceivedBlock& block, const Priors& priors, RngStream& rng,
                        double temperature) {
  const double shape = priors.alpha0 + static_cast<double>(block.length());
  const double scale = priors.beta0 + state.residual_norm2 / temperature;
  state.sigma2 = sample_invgamma(shape, scale, rng);
  return state.sigma2;
}

// --- symbols / labels / mixture ---------------------------------------------

std::vector<double> symbol_pair_logweights(std::ptrdiff_t n, const GibbsState& state, const ReceivedBlock& block,
                                           const ConstellationSet& set, double temperature) {
  check_time_index(n, block);
  SymbolWorkspace ws(set);
  fill_pair_logweights(n, state, block, set, temperature, ws);
  return ws.pair_logw;
}

SymbolPair sample_symbol(std::ptrdiff_t n, GibbsState& state, const ReceivedBlock& block,
                         const ConstellationSet& set, double temperature, RngStream& rng) {
  check_time_index(n, block);
  SymbolWorkspace ws(set);
  return draw_symbol(n, state, block, set, temperature, rng, ws);
}

std::vector<int> count_labels(std::span<const int> labels, std::size_t members) {
  std::vector<int> c(members, 0);
  for (int a : labels) {
    if (a < 0 || static_cast<std::size_t>(a) >= members) throw std::out_of_range("count_labels: label out of range");
    ++c[a];
  }
  return c;
}

std::vector<double> sample_mixture(std::span<const int> labels, const Priors& priors, RngStream& rng) {
  const auto c = count_labels(labels, priors.gamma.size());
  std::vector<double> conc(c.size());
  for (std::size_t a = 0; a < c.size(); ++a) conc[a] = priors.gamma[a] + c[a];
  return sample_dirichlet(conc, rng);
}

std::vector<double> superconstellation_update(std::span<const int> labels, std::size_t members) {
  const auto c = count_labels(labels, members);
  double total = 0;
  for (int v : c) total += v;
  if (!(total > 0)) throw std::invalid_argument("superconstellation_update: no labels to count");
  std::vector<double> p(members);
  for (std::size_t a = 0; a < members; ++a) p[a] = c[a] / total;
  return p;
}

void gibbs_sweep(GibbsState& state, const ReceivedBlock& block, const ConstellationSet& set, const Priors& priors,
                 const ChainConfig& config, std::size_t sweep_index, RngStream& rng) {
  const double rho = anneal_temperature(effective_schedule(config), sweep_index);

  switch (config.mode) {
    case SamplerMode::LatentDirichlet: {
      std::vector<double> conc(set.num_members());
      for (std::size_t a = 0; a < conc.size(); ++a) conc[a] = priors.gamma[a] + state.counts[a];
      state.mixture = sample_dirichlet(conc, rng);
      break;
    }
    case SamplerMode::Superconstellation:
      state.mixture = superconstellation_update(state.labels, set.num_members());
      break;
    case SamplerMode::Conventional:
      conventional_constellation_update(state, set, rng);
      break;
  }

  SymbolWorkspace ws(set);
  const auto L = static_cast<std::ptrdiff_t>(block.taps);
  const auto N = static_cast<std::ptrdiff_t>(block.length());
  for (std::ptrdiff_t n = -L + 1; n <= N - 1; ++n) draw_symbol(n, state, block, set, rho, rng, ws);
  // Re-sum the norm once per scan so rounding in the incremental updates
  // cannot accumulate across sweeps when h is held fixed.
  state.residual_norm2 = 0;
  for (cplx e : state.residual) state.residual_norm2 += std::norm(e);

  if (!config.fixed_taps) sample_channel(state, block, set, priors, rng, rho);
  if (!config.fixed_sigma2) sample_noise_var(state, block, priors, rng, rho);
}

ChainResult run_chain(const ReceivedBlock& block, const ConstellationSet& set, const Priors& priors,
                      const ChainConfig& config, RngStream& rng) {
  config.validate();
  priors.validate(set.num_members(), config.mode != SamplerMode::LatentDirichlet);
  if (block.length() == 0 || block.taps == 0) throw std::invalid_argument("run_chain: empty block");

  ChainResult result;
  result.members = set.num_members();
  result.final_state = initialize_state(block, set, priors, config, rng);
  GibbsState& state = result.final_state;

  const std::size_t total = config.burn_in + config.samples;
  result.mixture_samples.reserve(config.samples);
  result.label_count_samples.reserve(config.samples);
  result.loglik_trace.reserve(total);
  const double log_pi = std::log(std::numbers::pi);

  for (std::size_t sweep = 0; sweep < total; ++sweep) {
    gibbs_sweep(state, block, set, priors, config, sweep, rng);

    const double N = static_cast<double>(block.length());
    result.loglik_trace.push_back(-N * (log_pi + std::log(state.sigma2)) - state.residual_norm2 / state.sigma2);
    if (!state_valid(state, block, set)) result.all_states_valid = false;

    if (config.verify_every > 0 && (sweep + 1) % config.verify_every == 0) {
      const auto check = check_caches(state, block, set);
      if (check.residual_error > 1e-9 || check.norm_error > 1e-9 || !check.counts_match)
        throw std::logic_error("run_chain: cached residual/counts diverged from recompute at sweep " +
                               std::to_string(sweep));
    }

    if (sweep >= config.burn_in) {
      result.mixture_samples.push_back(state.mixture);
      result.label_count_samples.push_back(state.counts);
    }
  }
  return result;
}

std::size_t argmax_lowest(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < scores.size(); ++a)
    if (scores[a] > scores[best]) best = a;
  return best;
}

Classification classify(const ChainResult& result) {
  if (result.mixture_samples.empty()) throw std::invalid_argument("classify: chain has no retained samples");
  Classification c;
  c.scores.assign(result.mixture_samples.front().size(), 0.0);
  for (const auto& m : result.mixture_samples)
    for (std::size_t a = 0; a < m.size(); ++a) c.scores[a] += m[a];
  for (double& s : c.scores) s /= static_cast<double>(result.mixture_samples.size());
  c.estimate = argmax_lowest(c.scores);
  return c;
}

}  // namespace amc
