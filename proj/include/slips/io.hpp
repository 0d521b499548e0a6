#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "slips/checks.hpp"
#include "slips/config.hpp"
#include "slips/metrics.hpp"
#include "slips/version.hpp"

namespace slips {

using ordered_json = nlohmann::ordered_json;

namespace detail {

/// Shortest round-trip decimal form of a double, for CSV cells.
inline std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// SHA-256, needed for output digests in the run manifest.
class Sha256 {
 public:
  Sha256() { reset(); }

  void reset() {
    state_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
              0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
    buffer_len_ = 0;
    total_len_ = 0;
  }

  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    total_len_ += len;
    while (len > 0) {
      const std::size_t take = std::min(len, sizeof(buffer_) - buffer_len_);
      std::memcpy(buffer_ + buffer_len_, p, take);
      buffer_len_ += take;
      p += take;
      len -= take;
      if (buffer_len_ == sizeof(buffer_)) {
        process_block(buffer_);
        buffer_len_ = 0;
      }
    }
  }

  std::string hex_digest() {
    const std::uint64_t bit_len = total_len_ * 8;
    unsigned char pad[72];
    std::size_t pad_len = 0;
    pad[pad_len++] = 0x80;
    while ((buffer_len_ + pad_len) % 64 != 56) pad[pad_len++] = 0;
    for (int i = 7; i >= 0; --i) pad[pad_len++] = static_cast<unsigned char>(bit_len >> (8 * i));
    update_no_count(pad, pad_len);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (std::uint32_t word : state_) {
      for (int i = 3; i >= 0; --i) {
        const unsigned byte = (word >> (8 * i)) & 0xffu;
        out.push_back(hex[byte >> 4]);
        out.push_back(hex[byte & 0xf]);
      }
    }
    return out;
  }

 private:
  void update_no_count(const unsigned char* p, std::size_t len) {
    while (len > 0) {
      const std::size_t take = std::min(len, sizeof(buffer_) - buffer_len_);
      std::memcpy(buffer_ + buffer_len_, p, take);
      buffer_len_ += take;
      p += take;
      len -= take;
      if (buffer_len_ == sizeof(buffer_)) {
        process_block(buffer_);
        buffer_len_ = 0;
      }
    }
  }

  static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

  void process_block(const unsigned char* block) {
    static constexpr std::uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
        0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
        0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
        0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
        0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
        0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
        0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
        0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
        0xc67178f2};
    std::uint32_t w[64];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(block[4 * i]) << 24) | (std::uint32_t(block[4 * i + 1]) << 16) |
             (std::uint32_t(block[4 * i + 2]) << 8) | std::uint32_t(block[4 * i + 3]);
    for (int i = 16; i < 64; ++i) {
      const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }
    std::uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3];
    std::uint32_t e = state_[4], f = state_[5], g = state_[6], h = state_[7];
    for (int i = 0; i < 64; ++i) {
      const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = h + s1 + ch + k[i] + w[i];
      const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = s0 + maj;
      h = g;
      g = f;
      f = e;
      e = d + t1;
      d = c;
      c = b;
      b = a;
      a = t1 + t2;
    }
    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
    state_[4] += e;
    state_[5] += f;
    state_[6] += g;
    state_[7] += h;
  }

  std::array<std::uint32_t, 8> state_;
  unsigned char buffer_[64];
  std::size_t buffer_len_ = 0;
  std::uint64_t total_len_ = 0;
};

}  // namespace detail

inline std::string sha256_hex(const std::string& data) {
  detail::Sha256 h;
  h.update(data.data(), data.size());
  return h.hex_digest();
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return content;
}

/// samples.csv: header x0,...,x{d-1}, one run per row, LF endings,
/// shortest round-trip decimals.
inline std::string samples_csv_string(const Eigen::MatrixXd& samples) {
  std::string out;
  out.reserve(static_cast<std::size_t>(samples.size()) * 20 + 64);
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    if (j > 0) out.push_back(',');
    out += "x" + std::to_string(j);
  }
  out.push_back('\n');
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index j = 0; j < samples.cols(); ++j) {
      if (j > 0) out.push_back(',');
      out += detail::format_g17(samples(i, j));
    }
    out.push_back('\n');
  }
  return out;
}

inline Eigen::MatrixXd read_samples_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty samples file: " + path);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      const std::size_t comma = line.find(',', start);
      const std::string cell =
          line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(std::strtod(cell.c_str(), nullptr));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("no data rows in: " + path);
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw std::runtime_error("ragged samples file: " + path);
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

/// Step-by-step trace of a single run: pre-move state, denoiser estimate,
/// and acceptance rate per outer step.
inline std::string trace_csv_string(const RunResult& run) {
  const Eigen::Index d = run.sample.size();
  std::string out = "k,t,delta,acceptance";
  for (Eigen::Index j = 0; j < d; ++j) out += ",y" + std::to_string(j);
  for (Eigen::Index j = 0; j < d; ++j) out += ",u" + std::to_string(j);
  out.push_back('\n');
  for (std::size_t i = 0; i < run.steps.size(); ++i) {
    const StepRecord& step = run.steps[i];
    const double delta = (i + 1 < run.steps.size() ? run.steps[i + 1].t : run.config.T) - step.t;
    out += std::to_string(step.k);
    out.push_back(',');
    out += detail::format_g17(step.t);
    out.push_back(',');
    out += detail::format_g17(delta);
    out.push_back(',');
    out += detail::format_g17(step.acceptance);
    for (Eigen::Index j = 0; j < d; ++j) {
      out.push_back(',');
      out += detail::format_g17(step.state[j]);
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      out.push_back(',');
      out += detail::format_g17(step.u_hat[j]);
    }
    out.push_back('\n');
  }
  return out;
}

inline ordered_json config_to_json(const ExperimentConfig& config) {
  ordered_json target;
  target["kind"] = config.target.kind;
  target["dim"] = config.target.dim;
  ordered_json means = ordered_json::array();
  for (const auto& m : config.target.means) {
    ordered_json vec = ordered_json::array();
    for (Eigen::Index j = 0; j < m.size(); ++j) vec.push_back(m[j]);
    means.push_back(vec);
  }
  target["means"] = means;
  if (config.target.weights.size() > 0) {
    ordered_json w = ordered_json::array();
    for (Eigen::Index j = 0; j < config.target.weights.size(); ++j)
      w.push_back(config.target.weights[j]);
    target["weights"] = w;
  }
  target["component_variance"] = config.target.component_variance;

  const SlipsConfig& s = config.sampler;
  ordered_json sampler;
  sampler["t0"] = s.t0;
  sampler["horizon"] = s.T;
  sampler["steps"] = s.K;
  sampler["mcmc_steps"] = s.M;
  sampler["init_steps"] = s.N;
  if (s.sigma)
    sampler["sigma"] = *s.sigma;
  else
    sampler["sigma"] = "auto";
  sampler["grid"] = s.grid_kind == GridKind::uniform ? "uniform" : "log_snr";
  sampler["denoiser"] = s.denoiser_mode == DenoiserMode::oracle ? "oracle" : "mala";
  sampler["init"] = s.init_mode == InitMode::exact ? "exact" : "langevin";
  sampler["mala_step"] = s.mala_step;
  sampler["mala_adapt"] = s.mala_adapt;
  sampler["burn_in_fraction"] = s.burn_in_fraction;
  sampler["reuse_init_chain"] = s.reuse_init_chain;
  sampler["warm_discard"] = s.warm_discard;
  sampler["seed"] = s.seed;

  // workers and output paths are runtime choices, not part of the experiment
  // identity, so they stay out of the serialized config.
  ordered_json run;
  run["n_runs"] = config.run.n_runs;

  ordered_json j;
  j["target"] = target;
  j["sampler"] = sampler;
  j["run"] = run;
  return j;
}

inline ExperimentConfig config_from_json(const ordered_json& j) {
  ExperimentConfig config;
  const auto& target = j.at("target");
  config.target.kind = target.at("kind").get<std::string>();
  config.target.dim = target.at("dim").get<int>();
  for (const auto& vec : target.at("means")) {
    Eigen::VectorXd m(vec.size());
    for (std::size_t i = 0; i < vec.size(); ++i) m[static_cast<Eigen::Index>(i)] = vec[i].get<double>();
    config.target.means.push_back(m);
  }
  if (target.contains("weights")) {
    const auto& w = target.at("weights");
    config.target.weights.resize(static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i)
      config.target.weights[static_cast<Eigen::Index>(i)] = w[i].get<double>();
  }
  config.target.component_variance = target.at("component_variance").get<double>();

  const auto& sampler = j.at("sampler");
  SlipsConfig& s = config.sampler;
  s.t0 = sampler.at("t0").get<double>();
  s.T = sampler.at("horizon").get<double>();
  s.K = sampler.at("steps").get<int>();
  s.M = sampler.at("mcmc_steps").get<int>();
  s.N = sampler.at("init_steps").get<int>();
  if (sampler.at("sigma").is_string()) {
    if (sampler.at("sigma").get<std::string>() != "auto")
      throw std::runtime_error("config json: sigma must be a number or \"auto\"");
    s.sigma.reset();
  } else {
    s.sigma = sampler.at("sigma").get<double>();
  }
  const std::string grid = sampler.at("grid").get<std::string>();
  if (grid == "log_snr")
    s.grid_kind = GridKind::log_snr;
  else if (grid == "uniform")
    s.grid_kind = GridKind::uniform;
  else
    throw std::runtime_error("config json: unknown grid '" + grid + "'");
  const std::string denoiser = sampler.at("denoiser").get<std::string>();
  if (denoiser == "mala")
    s.denoiser_mode = DenoiserMode::mala;
  else if (denoiser == "oracle")
    s.denoiser_mode = DenoiserMode::oracle;
  else
    throw std::runtime_error("config json: unknown denoiser '" + denoiser + "'");
  const std::string init = sampler.at("init").get<std::string>();
  if (init == "langevin")
    s.init_mode = InitMode::langevin;
  else if (init == "exact")
    s.init_mode = InitMode::exact;
  else
    throw std::runtime_error("config json: unknown init '" + init + "'");
  s.mala_step = sampler.at("mala_step").get<double>();
  s.mala_adapt = sampler.at("mala_adapt").get<bool>();
  s.burn_in_fraction = sampler.at("burn_in_fraction").get<double>();
  s.reuse_init_chain = sampler.at("reuse_init_chain").get<bool>();
  s.warm_discard = sampler.at("warm_discard").get<bool>();
  s.seed = sampler.at("seed").get<std::uint64_t>();

  config.run.n_runs = j.at("run").at("n_runs").get<int>();
  config.validate();
  return config;
}

inline ordered_json metric_to_json(const MetricRecord& metric) {
  ordered_json j;
  j["metric"] = metric.metric;
  j["values"] = metric.values;
  j["std_error"] = metric.std_error;
  j["n_samples"] = metric.n_samples;
  ordered_json params;
  for (const auto& [key, value] : metric.params) params[key] = value;
  j["params"] = params;
  return j;
}

inline ordered_json check_to_json(const CheckReport& check) {
  ordered_json j;
  j["name"] = check.name;
  j["passed"] = check.passed;
  j["observed"] = check.observed;
  j["bound_or_target"] = check.bound_or_target;
  j["tolerance"] = check.tolerance;
  j["n_samples"] = check.n_samples;
  j["notes"] = check.notes;
  j["seed"] = check.seed;
  return j;
}

inline std::string checks_json_string(const std::vector<CheckReport>& checks) {
  ordered_json j;
  bool all = true;
  ordered_json list = ordered_json::array();
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back(check_to_json(c));
  }
  j["all_passed"] = all;
  j["checks"] = list;
  return j.dump(2) + "\n";
}

/// Timestamp for manifests. Honors SOURCE_DATE_EPOCH so archived runs can be
/// byte-identical.
inline std::int64_t manifest_timestamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(epoch, &end, 10);
    if (end != epoch && *end == '\0') return v;
  }
  return static_cast<std::int64_t>(std::time(nullptr));
}

struct ManifestOutput {
  std::string name;
  std::string sha256;
  std::size_t bytes = 0;
};

inline std::string manifest_json_string(const std::string& command,
                                        const ExperimentConfig& config,
                                        const std::vector<ManifestOutput>& outputs) {
  ordered_json j;
  j["format"] = "slips-manifest-v1";
  j["version"] = kVersion;
  j["created_unix"] = manifest_timestamp();
  j["command"] = command;
  j["config"] = config_to_json(config);
  ordered_json outs;
  for (const auto& o : outputs) {
    ordered_json entry;
    entry["sha256"] = o.sha256;
    entry["bytes"] = o.bytes;
    outs[o.name] = entry;
  }
  j["outputs"] = outs;
  return j.dump(2) + "\n";
}

/// Reads an experiment config from either the INI format or a manifest
/// produced by an earlier run (detected by a leading '{').
inline ExperimentConfig load_config_auto(const std::string& content) {
  std::size_t i = 0;
  while (i < content.size() && std::isspace(static_cast<unsigned char>(content[i]))) ++i;
  if (i < content.size() && content[i] == '{') {
    const ordered_json j = ordered_json::parse(content);
    if (j.contains("config")) return config_from_json(j.at("config"));
    return config_from_json(j);
  }
  return parse_config_string(content);
}

}  // namespace slips
