#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "slips/grids.hpp"
#include "slips/mcmc.hpp"
#include "slips/posterior.hpp"
#include "slips/rng.hpp"
#include "slips/targets.hpp"

namespace slips {

enum class DenoiserMode { mala, oracle };

/// How the state at t0 is produced. langevin is the self-contained ladder
/// (denoiser-estimated scores driving unadjusted Langevin); exact draws
/// t0 X + sigma sqrt(t0) xi directly from the target sampler, which isolates
/// discretization error in schedule studies.
enum class InitMode { langevin, exact };

struct SlipsConfig {
  double t0 = 0.01;
  double T = 100.0;
  int K = 100;  // number of intervals in the time grid
  int M = 100;  // inner-chain positions averaged per denoiser estimate
  int N = 50;   // unadjusted Langevin steps in the initialization ladder
  std::optional<double> sigma;  // empty: sqrt(variance_proxy / dim) of the target
  GridKind grid_kind = GridKind::log_snr;
  DenoiserMode denoiser_mode = DenoiserMode::mala;
  InitMode init_mode = InitMode::langevin;
  double mala_step = 0.5;  // initial dimensionless step scale
  bool mala_adapt = true;  // adapt the scale during fresh-chain burn-in
  double burn_in_fraction = 0.2;
  bool reuse_init_chain = true;  // warm-start step k = 0 from the ladder's last chain
  bool warm_discard = false;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(t0 > 0.0)) throw std::domain_error("SlipsConfig: t0 must be positive");
    if (!(T > t0)) throw std::domain_error("SlipsConfig: T must exceed t0");
    if (K < 1) throw std::domain_error("SlipsConfig: K must be at least 1");
    if (M < 1) throw std::domain_error("SlipsConfig: M must be at least 1");
    if (N < 0) throw std::domain_error("SlipsConfig: N must be nonnegative");
    if (sigma && !(*sigma > 0.0)) throw std::domain_error("SlipsConfig: sigma must be positive");
    if (!(mala_step > 0.0)) throw std::domain_error("SlipsConfig: mala_step must be positive");
    if (!(burn_in_fraction >= 0.0) || burn_in_fraction >= 1.0)
      throw std::domain_error("SlipsConfig: burn_in_fraction must be in [0, 1)");
    if (grid_kind == GridKind::custom)
      throw std::domain_error("SlipsConfig: grid kind must be log_snr or uniform");
  }

  DenoiserOptions denoiser_options() const {
    DenoiserOptions opts;
    opts.initial_step_scale = mala_step;
    opts.adapt = mala_adapt;
    opts.burn_in_fraction = burn_in_fraction;
    opts.warm_discard = warm_discard;
    return opts;
  }
};

inline double resolve_sigma(const TargetModel& target, const SlipsConfig& config) {
  if (config.sigma) return *config.sigma;
  if (!target.variance_proxy)
    throw std::domain_error("resolve_sigma: automatic sigma needs the target's variance proxy");
  return sigma_default(*target.variance_proxy, target.dim);
}

inline Discretization build_grid(const SlipsConfig& config) {
  return config.grid_kind == GridKind::uniform ? uniform_grid(config.t0, config.T, config.K)
                                               : log_snr_grid(config.t0, config.T, config.K);
}

struct InitResult {
  Eigen::VectorXd state;
  std::optional<MalaState> chain;  // last inner chain, reusable at step k = 0
  double mean_acceptance = std::numeric_limits<double>::quiet_NaN();
};

/// Initialization ladder. Starts from Y ~ N(0, sigma^2 t0 I), then performs
/// N unadjusted Langevin steps of size lambda = sigma^2 t0 / 2 against the
/// time-t0 observation marginal, with the score at the current point
/// recovered from a denoiser estimate. Inner chains warm-start across steps.
inline InitResult initialize(const TargetModel& target, const SlipsConfig& config, double sigma,
                             Rng& rng) {
  const int d = target.dim;
  const double t0 = config.t0;
  InitResult out;
  out.state = sigma * std::sqrt(t0) * rng.normal_vector(d);
  const double lambda = sigma * sigma * t0 / 2.0;
  const DenoiserOptions opts = config.denoiser_options();
  double acc_sum = 0.0;
  int acc_n = 0;
  for (int n = 0; n < config.N; ++n) {
    Eigen::VectorXd u;
    if (config.denoiser_mode == DenoiserMode::oracle) {
      u = target.oracle_denoiser(t0, sigma, out.state);
    } else {
      auto est =
          estimate_denoiser(target, t0, sigma, out.state, config.M, std::move(out.chain), rng, opts);
      u = std::move(est.u_hat);
      out.chain = std::move(est.final_state);
      acc_sum += est.acceptance_rate;
      ++acc_n;
    }
    const Eigen::VectorXd score = tweedie_score(t0, sigma, out.state, u);
    out.state = ula_step([&](const Eigen::VectorXd&) { return score; }, out.state, lambda, rng);
  }
  if (acc_n > 0) out.mean_acceptance = acc_sum / acc_n;
  return out;
}

struct StepRecord {
  int k = 0;
  double t = 0.0;
  Eigen::VectorXd state;   // state at time t, before the move
  Eigen::VectorXd u_hat;   // denoiser used for the move
  double acceptance = std::numeric_limits<double>::quiet_NaN();  // NaN in oracle mode
  Eigen::VectorXd noise;   // the standard normal driving the move
};

struct RunResult {
  Eigen::VectorXd sample;  // final state divided by the horizon time
  std::vector<Eigen::VectorXd> states;  // K + 1 states when tracing
  std::vector<StepRecord> steps;        // K records when tracing
  SlipsConfig config;
  std::uint64_t seed = 0;
  int run_index = 0;
  double init_mean_acceptance = std::numeric_limits<double>::quiet_NaN();
  double low_acceptance_fraction = 0.0;  // fraction of steps with acceptance < 0.1
};

/// One full sampling run. The generator is consumed in a fixed order
/// (initialization first, then per step: inner-chain block, then the
/// driving normal), so traces can be replayed from the seed alone.
inline RunResult run_slips(const TargetModel& target, const SlipsConfig& config, Rng& rng,
                           bool keep_trace = true) {
  config.validate();
  if (config.denoiser_mode == DenoiserMode::oracle && !target.has_oracle_denoiser())
    throw std::domain_error("run_slips: oracle mode needs an oracle denoiser");
  if (config.init_mode == InitMode::exact && !target.has_sampler())
    throw std::domain_error("run_slips: exact initialization needs a target sampler");
  const double sigma = resolve_sigma(target, config);
  const Discretization disc = build_grid(config);
  const int K = disc.intervals();
  const int d = target.dim;

  RunResult out;
  out.config = config;
  out.seed = config.seed;

  Eigen::VectorXd y;
  std::optional<MalaState> warm;
  if (config.init_mode == InitMode::exact) {
    y = config.t0 * target.sample(rng) + sigma * std::sqrt(config.t0) * rng.normal_vector(d);
  } else {
    InitResult init = initialize(target, config, sigma, rng);
    y = std::move(init.state);
    warm = std::move(init.chain);
    out.init_mean_acceptance = init.mean_acceptance;
  }
  if (!config.reuse_init_chain) warm.reset();

  const DenoiserOptions opts = config.denoiser_options();
  const bool mala = config.denoiser_mode == DenoiserMode::mala;
  int low_acceptance = 0;
  if (keep_trace) {
    out.states.reserve(K + 1);
    out.steps.reserve(K);
    out.states.push_back(y);
  }
  for (int k = 0; k < K; ++k) {
    const double t_k = disc.grid[k];
    const double delta = disc.grid[k + 1] - t_k;
    Eigen::VectorXd u;
    double acceptance = std::numeric_limits<double>::quiet_NaN();
    try {
      if (mala) {
        auto est = estimate_denoiser(target, t_k, sigma, y, config.M, std::move(warm), rng, opts);
        u = std::move(est.u_hat);
        warm = std::move(est.final_state);
        acceptance = est.acceptance_rate;
        if (acceptance < 0.1) ++low_acceptance;
      } else {
        u = target.oracle_denoiser(t_k, sigma, y);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("run_slips: step " + std::to_string(k) + ": " + e.what());
    }
    const Eigen::VectorXd noise = rng.normal_vector(d);
    if (keep_trace) out.steps.push_back({k, t_k, y, u, acceptance, noise});
    y = y + delta * u + sigma * std::sqrt(delta) * noise;
    if (keep_trace) out.states.push_back(y);
  }
  out.sample = y / disc.horizon();
  out.low_acceptance_fraction = mala && K > 0 ? static_cast<double>(low_acceptance) / K : 0.0;
  return out;
}

inline RunResult run_slips(const TargetModel& target, const SlipsConfig& config,
                           bool keep_trace = true) {
  Rng rng(config.seed);
  return run_slips(target, config, rng, keep_trace);
}

struct BatchFailure {
  int run_index = 0;
  std::string message;
};

struct BatchResult {
  std::vector<RunResult> runs;         // successful runs, ordered by run_index
  std::vector<BatchFailure> failures;  // ordered by run_index
  int n_requested = 0;

  Eigen::MatrixXd sample_matrix() const {
    if (runs.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(runs.size(), runs.front().sample.size());
    for (std::size_t i = 0; i < runs.size(); ++i) m.row(i) = runs[i].sample.transpose();
    return m;
  }
};

/// Independent runs with per-run generators derived from (seed, run_index).
/// Results are bit-identical for any worker count; failed runs are collected
/// into the failure list instead of aborting the batch.
inline BatchResult run_batch(const TargetModel& target, const SlipsConfig& config, int n_runs,
                             int workers, bool keep_traces = false) {
  if (n_runs < 1) throw std::domain_error("run_batch: n_runs must be at least 1");
  if (workers < 1) throw std::domain_error("run_batch: workers must be at least 1");
  config.validate();
  workers = std::min(workers, n_runs);

  std::vector<std::optional<RunResult>> slots(n_runs);
  std::vector<std::optional<BatchFailure>> failed(n_runs);
  std::atomic<int> next{0};
  auto work = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n_runs) return;
      try {
        Rng rng = Rng::derive(config.seed, static_cast<std::uint64_t>(i));
        RunResult r = run_slips(target, config, rng, keep_traces);
        r.run_index = i;
        slots[i] = std::move(r);
      } catch (const std::exception& e) {
        failed[i] = BatchFailure{i, e.what()};
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  BatchResult out;
  out.n_requested = n_runs;
  for (int i = 0; i < n_runs; ++i) {
    if (slots[i]) out.runs.push_back(std::move(*slots[i]));
    if (failed[i]) out.failures.push_back(std::move(*failed[i]));
  }
  return out;
}

}  // namespace slips
