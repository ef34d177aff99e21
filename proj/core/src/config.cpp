#include "amc/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace amc {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(trim(v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view why) {
  throw ConfigError("key '" + std::string(key) + "': " + std::string(why) + " (got '" + std::string(value) + "')");
}

double to_double(std::string_view key, std::string_view v) {
  v = trim(v);
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
    bad_value(key, v, "expected a finite number");
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  v = trim(v);
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc{} || res.ptr != v.data() + v.size())
    bad_value(key, v, "expected a non-negative integer");
  return out;
}

std::vector<double> to_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  for (auto item : split_list(v)) out.push_back(to_double(key, item));
  return out;
}

template <typename Parse>
auto parse_enum(std::string_view key, std::string_view v, Parse parse) {
  try {
    return parse(trim(v));
  } catch (const std::invalid_argument& e) {
    bad_value(key, v, e.what());
  }
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest form that still round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char tmp[40];
    std::snprintf(tmp, sizeof tmp, "%.*g", prec, v);
    if (std::strtod(tmp, nullptr) == v) return tmp;
  }
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
  return s;
}

}  // namespace

std::string_view to_string(ChannelModel model) {
  return model == ChannelModel::Tapped ? "tapped" : "two-path";
}

ChannelModel parse_channel_model(std::string_view label) {
  if (label == "tapped") return ChannelModel::Tapped;
  if (label == "two-path") return ChannelModel::TwoPath;
  throw std::invalid_argument("unknown channel model '" + std::string(label) + "'");
}

std::size_t ExperimentConfig::channel_length() const {
  return channel == ChannelModel::Tapped ? power_profile_db.size() : taps;
}

void ExperimentConfig::validate() const {
  if (constellations.empty()) throw ConfigError("constellations: list must not be empty");
  std::set<ConstellationKind> seen(constellations.begin(), constellations.end());
  if (seen.size() != constellations.size()) throw ConfigError("constellations: duplicate entry");
  if (channel == ChannelModel::Tapped && power_profile_db.empty())
    throw ConfigError("power_profile_db: must not be empty for the tapped channel");
  if (channel == ChannelModel::TwoPath) {
    if (path_delays.empty() || path_delays.size() != path_powers_db.size())
      throw ConfigError("path_delays/path_powers_db: must be non-empty and of equal length");
    if (taps == 0) throw ConfigError("taps: must be >= 1");
    if (rolloff < 0 || rolloff > 1) throw ConfigError("rolloff: must lie in [0, 1]");
  }
  if (block_length == 0) throw ConfigError("block_length: must be >= 1");
  if (block_length < channel_length()) throw ConfigError("block_length: N must be >= L");
  if (snr_db.empty()) throw ConfigError("snr_db: grid must not be empty");
  if (trials == 0) throw ConfigError("trials: must be >= 1");
  if (samples == 0) throw ConfigError("samples: must be >= 1");
  if (modes.empty()) throw ConfigError("modes: list must not be empty");
  for (auto m : modes)
    if (m == SamplerMode::LatentDirichlet && gamma.empty()) throw ConfigError("gamma: needed for latent-dirichlet");
  for (double g : gamma)
    if (!(g > 0)) throw ConfigError("gamma: entries must be > 0");
  if (!(alpha_h > 0)) throw ConfigError("alpha_h: must be > 0");
  if (!(alpha0 > 0)) throw ConfigError("alpha0: must be > 0");
  if (!(beta0 > 0)) throw ConfigError("beta0: must be > 0");
  if (annealing != AnnealingKind::None && !(anneal_rho0 >= 1)) throw ConfigError("anneal_rho0: must be >= 1");
}

void apply_config_value(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "constellations") {
    cfg.constellations.clear();
    for (auto item : split_list(value)) cfg.constellations.push_back(parse_enum(key, item, parse_constellation_kind));
  } else if (key == "channel") {
    cfg.channel = parse_enum(key, value, parse_channel_model);
  } else if (key == "power_profile_db") {
    cfg.power_profile_db = to_doubles(key, value);
  } else if (key == "path_delays") {
    cfg.path_delays = to_doubles(key, value);
  } else if (key == "path_powers_db") {
    cfg.path_powers_db = to_doubles(key, value);
  } else if (key == "rolloff") {
    cfg.rolloff = to_double(key, value);
  } else if (key == "taps") {
    cfg.taps = to_uint(key, value);
  } else if (key == "block_length") {
    cfg.block_length = to_uint(key, value);
  } else if (key == "snr_db") {
    cfg.snr_db = to_doubles(key, value);
  } else if (key == "trials") {
    cfg.trials = to_uint(key, value);
  } else if (key == "samples") {
    cfg.samples = to_uint(key, value);
  } else if (key == "burn_in") {
    cfg.burn_in = to_uint(key, value);
  } else if (key == "modes") {
    cfg.modes.clear();
    for (auto item : split_list(value)) cfg.modes.push_back(parse_enum(key, item, parse_sampler_mode));
  } else if (key == "gamma") {
    cfg.gamma = to_doubles(key, value);
  } else if (key == "alpha_h") {
    cfg.alpha_h = to_double(key, value);
  } else if (key == "alpha0") {
    cfg.alpha0 = to_double(key, value);
  } else if (key == "beta0") {
    cfg.beta0 = to_double(key, value);
  } else if (key == "annealing") {
    cfg.annealing = parse_enum(key, value, parse_annealing_kind);
  } else if (key == "anneal_rho0") {
    cfg.anneal_rho0 = to_double(key, value);
  } else if (key == "seed") {
    cfg.seed = to_uint(key, value);
  } else if (key == "workers") {
    cfg.workers = to_uint(key, value);
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

ExperimentConfig parse_config(std::string_view text, std::string_view source) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = std::string(source) + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(where + "missing key before '='");
    if (!seen.emplace(key).second) throw ConfigError(where + "duplicate key '" + std::string(key) + "'");
    try {
      apply_config_value(cfg, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(source) + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string format_config(const ExperimentConfig& cfg, bool as_comments) {
  std::ostringstream os;
  const char* prefix = as_comments ? "# " : "";
  auto line = [&](std::string_view key, const std::string& value) { os << prefix << key << " = " << value << '\n'; };

  std::string labels;
  for (std::size_t i = 0; i < cfg.constellations.size(); ++i)
    labels += (i ? ", " : "") + std::string(to_string(cfg.constellations[i]));
  std::string modes;
  for (std::size_t i = 0; i < cfg.modes.size(); ++i) modes += (i ? ", " : "") + std::string(to_string(cfg.modes[i]));

  line("constellations", labels);
  line("channel", std::string(to_string(cfg.channel)));
  line("power_profile_db", join_doubles(cfg.power_profile_db));
  line("path_delays", join_doubles(cfg.path_delays));
  line("path_powers_db", join_doubles(cfg.path_powers_db));
  line("rolloff", fmt_double(cfg.rolloff));
  line("taps", std::to_string(cfg.taps));
  line("block_length", std::to_string(cfg.block_length));
  line("snr_db", join_doubles(cfg.snr_db));
  line("trials", std::to_string(cfg.trials));
  line("samples", std::to_string(cfg.samples));
  line("burn_in", std::to_string(cfg.burn_in));
  line("modes", modes);
  line("gamma", join_doubles(cfg.gamma));
  line("alpha_h", fmt_double(cfg.alpha_h));
  line("alpha0", fmt_double(cfg.alpha0));
  line("beta0", fmt_double(cfg.beta0));
  line("annealing", std::string(to_string(cfg.annealing)));
  line("anneal_rho0", fmt_double(cfg.anneal_rho0));
  line("seed", std::to_string(cfg.seed));
  line("workers", std::to_string(cfg.workers));
  return os.str();
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config file '" + path.string() + "'");
  out << format_config(cfg);
}

}  // namespace amc
