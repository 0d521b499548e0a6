#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slips/slips.hpp"
#include "slips/targets.hpp"

namespace slips {

/// Configuration parse or validation failure. `line` is 1-based; 0 means the
/// problem is not tied to a single line (for example a missing key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message)
      : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message
                                    : "config: " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct TargetConfig {
  std::string kind = "gmm";
  int dim = 1;
  std::vector<Eigen::VectorXd> means;
  Eigen::VectorXd weights;  // empty means uniform
  double component_variance = 1.0;
};

struct RunConfig {
  int n_runs = 16;
  int workers = 1;
};

struct ExperimentConfig {
  TargetConfig target;
  SlipsConfig sampler;
  RunConfig run;

  void validate() const;
  GaussianMixture make_mixture() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_double(const std::string& raw, int line, const std::string& key) {
  const std::string s = trim(raw);
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end)
    throw ConfigError(line, "key '" + key + "': cannot parse '" + s + "' as a number");
  return value;
}

inline long long parse_integer(const std::string& raw, int line, const std::string& key) {
  const std::string s = trim(raw);
  long long value = 0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end)
    throw ConfigError(line, "key '" + key + "': cannot parse '" + s + "' as an integer");
  return value;
}

inline bool parse_bool(const std::string& raw, int line, const std::string& key) {
  const std::string s = trim(raw);
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError(line, "key '" + key + "': expected 'true' or 'false', got '" + s + "'");
}

inline std::vector<double> parse_number_list(const std::string& raw, int line,
                                             const std::string& key) {
  std::vector<double> values;
  std::string token;
  std::istringstream is(raw);
  while (is >> token) {
    if (!token.empty() && token.back() == ',') token.pop_back();
    if (token.empty()) continue;
    values.push_back(parse_double(token, line, key));
  }
  return values;
}

struct RawEntry {
  std::string value;
  int line = 0;
};

}  // namespace detail

inline GaussianMixture ExperimentConfig::make_mixture() const {
  GaussianMixture gmm;
  gmm.means = target.means;
  gmm.component_variance = target.component_variance;
  if (target.weights.size() == 0) {
    const auto n = static_cast<Eigen::Index>(target.means.size());
    gmm.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  } else {
    gmm.weights = target.weights / target.weights.sum();
  }
  gmm.validate();
  return gmm;
}

inline void ExperimentConfig::validate() const {
  if (target.kind != "gmm") throw ConfigError(0, "unsupported target kind '" + target.kind + "'");
  if (target.dim < 1) throw ConfigError(0, "target dim must be at least 1");
  if (target.means.empty()) throw ConfigError(0, "[target] means is required");
  for (const auto& m : target.means)
    if (m.size() != target.dim) throw ConfigError(0, "a mean has the wrong dimension");
  if (!(target.component_variance > 0.0))
    throw ConfigError(0, "component_variance must be positive");
  if (target.weights.size() != 0) {
    if (static_cast<std::size_t>(target.weights.size()) != target.means.size())
      throw ConfigError(0, "weights count does not match means count");
    if (!(target.weights.minCoeff() >= 0.0) || !(target.weights.sum() > 0.0))
      throw ConfigError(0, "weights must be nonnegative with positive sum");
  }
  if (run.n_runs < 1) throw ConfigError(0, "n_runs must be at least 1");
  if (run.workers < 1) throw ConfigError(0, "workers must be at least 1");
  try {
    sampler.validate();
  } catch (const std::exception& e) {
    throw ConfigError(0, e.what());
  }
}

/// Parses the INI experiment format:
///
///   [target]
///   kind = gmm
///   dim = 2
///   means = +-1            # symmetric pair at +c and -c along the all-ones vector
///   # or explicit:  means = -1 -1; 1 1
///   weights = 0.5 0.5      # optional, uniform when omitted, normalized otherwise
///   component_variance = 1.0
///
///   [sampler]
///   t0 = 0.04
///   horizon = 4000         # alias: snr_target (the horizon equals the final SNR)
///   steps = 200
///   mcmc_steps = 100
///   init_steps = 100
///   sigma = auto           # or a positive number
///   grid = log_snr         # log_snr | uniform
///   denoiser = mala        # mala | oracle
///   init = langevin        # langevin | exact
///   mala_step = 0.5
///   mala_adapt = true
///   burn_in_fraction = 0.2
///   reuse_init_chain = true
///   warm_discard = false
///   seed = 1
///
///   [run]
///   n_runs = 64
///   workers = 1
///
/// Unknown sections or keys, duplicate keys, malformed values, and the
/// horizon/snr_target conflict are reported with their line number.
inline ExperimentConfig parse_config(std::istream& in) {
  static const std::set<std::string> kSections = {"target", "sampler", "run"};
  static const std::map<std::string, std::set<std::string>> kKeys = {
      {"target", {"kind", "dim", "means", "weights", "component_variance"}},
      {"sampler",
       {"t0", "horizon", "snr_target", "steps", "mcmc_steps", "init_steps", "sigma", "grid",
        "denoiser", "init", "mala_step", "mala_adapt", "burn_in_fraction", "reuse_init_chain",
        "warm_discard", "seed"}},
      {"run", {"n_runs", "workers"}}};

  std::map<std::string, std::map<std::string, detail::RawEntry>> entries;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string text = detail::trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(line_no, "unterminated section header");
      section = detail::trim(text.substr(1, text.size() - 2));
      if (!kSections.count(section))
        throw ConfigError(line_no, "unknown section '[" + section + "]'");
      continue;
    }
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos)
      throw ConfigError(line_no, "expected 'key = value', got '" + text + "'");
    if (section.empty()) throw ConfigError(line_no, "key before any [section] header");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (!kKeys.at(section).count(key))
      throw ConfigError(line_no, "unknown key '" + key + "' in [" + section + "]");
    auto& slot = entries[section][key];
    if (slot.line != 0)
      throw ConfigError(line_no, "duplicate key '" + key + "' (first set on line " +
                                     std::to_string(slot.line) + ")");
    slot = {value, line_no};
  }

  ExperimentConfig config;
  auto take = [&](const std::string& sec, const std::string& key) -> const detail::RawEntry* {
    const auto sec_it = entries.find(sec);
    if (sec_it == entries.end()) return nullptr;
    const auto it = sec_it->second.find(key);
    return it == sec_it->second.end() ? nullptr : &it->second;
  };

  // [target]
  if (const auto* e = take("target", "kind")) config.target.kind = e->value;
  if (const auto* e = take("target", "dim")) {
    const long long v = detail::parse_integer(e->value, e->line, "dim");
    if (v < 1 || v > 1'000'000) throw ConfigError(e->line, "dim out of range");
    config.target.dim = static_cast<int>(v);
  }
  if (const auto* e = take("target", "component_variance"))
    config.target.component_variance = detail::parse_double(e->value, e->line, "component_variance");
  if (const auto* e = take("target", "means")) {
    const std::string raw = detail::trim(e->value);
    if (raw.rfind("+-", 0) == 0) {
      const double c = detail::parse_double(raw.substr(2), e->line, "means");
      config.target.means = {Eigen::VectorXd::Constant(config.target.dim, c),
                             Eigen::VectorXd::Constant(config.target.dim, -c)};
    } else {
      std::size_t start = 0;
      while (start <= raw.size()) {
        const std::size_t semi = raw.find(';', start);
        const std::string part =
            raw.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
        const std::vector<double> coords = detail::parse_number_list(part, e->line, "means");
        if (coords.empty()) throw ConfigError(e->line, "empty mean vector in 'means'");
        if (static_cast<int>(coords.size()) != config.target.dim)
          throw ConfigError(e->line, "mean vector has " + std::to_string(coords.size()) +
                                         " coordinates, expected " +
                                         std::to_string(config.target.dim) +
                                         " (set dim before means)");
        config.target.means.push_back(
            Eigen::Map<const Eigen::VectorXd>(coords.data(), coords.size()));
        if (semi == std::string::npos) break;
        start = semi + 1;
      }
    }
  }
  if (const auto* e = take("target", "weights")) {
    const std::vector<double> w = detail::parse_number_list(e->value, e->line, "weights");
    if (w.empty()) throw ConfigError(e->line, "weights list is empty");
    config.target.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  }

  // [sampler]
  const auto* horizon = take("sampler", "horizon");
  const auto* snr_target = take("sampler", "snr_target");
  if (horizon && snr_target)
    throw ConfigError(std::max(horizon->line, snr_target->line),
                      "'horizon' and 'snr_target' are aliases; set only one");
  if (const auto* e = horizon ? horizon : snr_target)
    config.sampler.T = detail::parse_double(e->value, e->line, horizon ? "horizon" : "snr_target");
  if (const auto* e = take("sampler", "t0"))
    config.sampler.t0 = detail::parse_double(e->value, e->line, "t0");
  if (const auto* e = take("sampler", "steps")) {
    const long long v = detail::parse_integer(e->value, e->line, "steps");
    if (v < 1 || v > 100'000'000) throw ConfigError(e->line, "steps out of range");
    config.sampler.K = static_cast<int>(v);
  }
  if (const auto* e = take("sampler", "mcmc_steps")) {
    const long long v = detail::parse_integer(e->value, e->line, "mcmc_steps");
    if (v < 1 || v > 100'000'000) throw ConfigError(e->line, "mcmc_steps out of range");
    config.sampler.M = static_cast<int>(v);
  }
  if (const auto* e = take("sampler", "init_steps")) {
    const long long v = detail::parse_integer(e->value, e->line, "init_steps");
    if (v < 0 || v > 100'000'000) throw ConfigError(e->line, "init_steps out of range");
    config.sampler.N = static_cast<int>(v);
  }
  if (const auto* e = take("sampler", "sigma")) {
    if (detail::trim(e->value) == "auto") {
      config.sampler.sigma.reset();
    } else {
      config.sampler.sigma = detail::parse_double(e->value, e->line, "sigma");
      if (!(*config.sampler.sigma > 0.0)) throw ConfigError(e->line, "sigma must be positive");
    }
  }
  if (const auto* e = take("sampler", "grid")) {
    const std::string v = detail::trim(e->value);
    if (v == "log_snr")
      config.sampler.grid_kind = GridKind::log_snr;
    else if (v == "uniform")
      config.sampler.grid_kind = GridKind::uniform;
    else
      throw ConfigError(e->line, "grid must be 'log_snr' or 'uniform', got '" + v + "'");
  }
  if (const auto* e = take("sampler", "denoiser")) {
    const std::string v = detail::trim(e->value);
    if (v == "mala")
      config.sampler.denoiser_mode = DenoiserMode::mala;
    else if (v == "oracle")
      config.sampler.denoiser_mode = DenoiserMode::oracle;
    else
      throw ConfigError(e->line, "denoiser must be 'mala' or 'oracle', got '" + v + "'");
  }
  if (const auto* e = take("sampler", "init")) {
    const std::string v = detail::trim(e->value);
    if (v == "langevin")
      config.sampler.init_mode = InitMode::langevin;
    else if (v == "exact")
      config.sampler.init_mode = InitMode::exact;
    else
      throw ConfigError(e->line, "init must be 'langevin' or 'exact', got '" + v + "'");
  }
  if (const auto* e = take("sampler", "mala_step"))
    config.sampler.mala_step = detail::parse_double(e->value, e->line, "mala_step");
  if (const auto* e = take("sampler", "mala_adapt"))
    config.sampler.mala_adapt = detail::parse_bool(e->value, e->line, "mala_adapt");
  if (const auto* e = take("sampler", "burn_in_fraction"))
    config.sampler.burn_in_fraction = detail::parse_double(e->value, e->line, "burn_in_fraction");
  if (const auto* e = take("sampler", "reuse_init_chain"))
    config.sampler.reuse_init_chain = detail::parse_bool(e->value, e->line, "reuse_init_chain");
  if (const auto* e = take("sampler", "warm_discard"))
    config.sampler.warm_discard = detail::parse_bool(e->value, e->line, "warm_discard");
  if (const auto* e = take("sampler", "seed")) {
    const std::string s = detail::trim(e->value);
    std::uint64_t v = 0;
    const auto result = std::from_chars(s.data(), s.data() + s.size(), v);
    if (result.ec != std::errc() || result.ptr != s.data() + s.size())
      throw ConfigError(e->line, "key 'seed': cannot parse '" + s + "' as an unsigned integer");
    config.sampler.seed = v;
  }

  // [run]
  if (const auto* e = take("run", "n_runs")) {
    const long long v = detail::parse_integer(e->value, e->line, "n_runs");
    if (v < 1 || v > 100'000'000) throw ConfigError(e->line, "n_runs out of range");
    config.run.n_runs = static_cast<int>(v);
  }
  if (const auto* e = take("run", "workers")) {
    const long long v = detail::parse_integer(e->value, e->line, "workers");
    if (v < 1 || v > 4096) throw ConfigError(e->line, "workers out of range");
    config.run.workers = static_cast<int>(v);
  }

  config.validate();
  return config;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace slips
