#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "slips/grids.hpp"
#include "slips/posterior.hpp"
#include "slips/rng.hpp"
#include "slips/targets.hpp"

namespace slips {

/// MALA chain state. log_density and grad always cache the values at
/// position; anything that repositions the chain must refresh them.
/// step_size is the absolute proposal step in use; step_scale is the
/// dimensionless multiplier it was derived from and is what warm starts
/// carry across posteriors.
struct MalaState {
  Eigen::VectorXd position;
  double log_density = 0.0;
  Eigen::VectorXd grad;
  double step_size = 0.1;
  double step_scale = 0.5;
  long accept_count = 0;
  long proposal_count = 0;
  double last_accept_prob = 0.0;
};

template <class LogDensity, class Gradient>
MalaState make_mala_state(const LogDensity& log_density, const Gradient& gradient,
                          Eigen::VectorXd position, double step_size, double step_scale = 0.5) {
  if (!(step_size > 0.0)) throw std::domain_error("make_mala_state: step size must be positive");
  MalaState state;
  state.position = std::move(position);
  state.log_density = log_density(state.position);
  state.grad = gradient(state.position);
  state.step_size = step_size;
  state.step_scale = step_scale;
  return state;
}

namespace detail {

// Log density of the Langevin proposal to' given from': N(from + h g(from), 2h I),
// up to the constant that cancels in the acceptance ratio.
inline double langevin_log_q(const Eigen::VectorXd& to, const Eigen::VectorXd& from,
                             const Eigen::VectorXd& grad_from, double h) {
  return -(to - from - h * grad_from).squaredNorm() / (4.0 * h);
}

}  // namespace detail

/// One Metropolis-adjusted Langevin transition. Exactly invariant for the
/// given log density at any step size. A proposal whose log density is
/// non-finite counts as a rejection, not an error, so hard density cutoffs
/// are handled gracefully. Consumes d normals plus one uniform per call.
template <class LogDensity, class Gradient>
MalaState mala_step(const LogDensity& log_density, const Gradient& gradient, MalaState state,
                    Rng& rng) {
  const double h = state.step_size;
  if (!(h > 0.0)) throw std::domain_error("mala_step: step size must be positive");
  const Eigen::VectorXd xi = rng.normal_vector(state.position.size());
  const Eigen::VectorXd proposal = state.position + h * state.grad + std::sqrt(2.0 * h) * xi;
  ++state.proposal_count;
  const double lp = log_density(proposal);
  double log_alpha = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad_prop;
  if (std::isfinite(lp)) {
    grad_prop = gradient(proposal);
    const double fwd = detail::langevin_log_q(proposal, state.position, state.grad, h);
    const double rev = detail::langevin_log_q(state.position, proposal, grad_prop, h);
    log_alpha = lp - state.log_density + rev - fwd;
  }
  state.last_accept_prob = std::isfinite(log_alpha) ? std::exp(std::min(0.0, log_alpha))
                                                    : (log_alpha > 0.0 ? 1.0 : 0.0);
  const double u = rng.uniform();
  if (std::log(u) < log_alpha) {
    state.position = proposal;
    state.log_density = lp;
    state.grad = std::move(grad_prop);
    ++state.accept_count;
  }
  return state;
}

/// One unadjusted Langevin step x + lambda * score(x) + sqrt(2 lambda) * xi.
/// Used only by the initialization ladder, where there is no density to
/// correct against; a non-finite score is therefore a hard error.
template <class Score>
Eigen::VectorXd ula_step(const Score& score, const Eigen::VectorXd& position, double lambda,
                         Rng& rng) {
  if (!(lambda > 0.0)) throw std::domain_error("ula_step: lambda must be positive");
  const Eigen::VectorXd s = score(position);
  if (!s.allFinite()) throw std::runtime_error("ula_step: non-finite score estimate");
  return position + lambda * s + std::sqrt(2.0 * lambda) * rng.normal_vector(position.size());
}

/// Burn-in with Robbins-Monro adaptation of the step scale, driving the
/// Metropolis acceptance probability toward target_acceptance. Updates act
/// on log(step_scale) with gain i^{-0.6}; the absolute step is
/// step_scale * proposal_scale throughout.
template <class LogDensity, class Gradient>
MalaState run_adaptive_burn_in(const LogDensity& log_density, const Gradient& gradient,
                               MalaState state, int n_steps, double target_acceptance,
                               double proposal_scale, Rng& rng) {
  for (int i = 1; i <= n_steps; ++i) {
    state = mala_step(log_density, gradient, std::move(state), rng);
    const double gain = 1.0 / std::pow(static_cast<double>(i), 0.6);
    state.step_scale *= std::exp(gain * (state.last_accept_prob - target_acceptance));
    state.step_scale = std::clamp(state.step_scale, 1e-8, 1e8);
    state.step_size = state.step_scale * proposal_scale;
  }
  return state;
}

/// Reference scale for MALA proposals against the posterior at observation
/// time t. The Gaussian factor of the posterior has per-coordinate variance
/// sigma^2 / t; blending in the prior scale (when known) keeps the step
/// sensible at small t where the prior dominates.
inline double posterior_proposal_scale(double t, double sigma, double prior_variance_per_coord) {
  detail::require_time_sigma(t, sigma);
  const double sig2 = sigma * sigma;
  const double prior_precision =
      prior_variance_per_coord > 0.0 ? 1.0 / prior_variance_per_coord : 1.0 / sig2;
  return 1.0 / (prior_precision + t / sig2);
}

struct DenoiserOptions {
  double initial_step_scale = 0.5;
  bool adapt = true;                    // Robbins-Monro during fresh burn-in only
  double target_acceptance = 0.574;
  double burn_in_fraction = 0.2;        // fresh chains prepend ceil(fraction * M) steps
  bool warm_discard = false;            // warm chains may also prepend the block (no adaptation)
  double prior_variance_per_coord = 0.0;  // 0: take variance_proxy / dim if the target has one
};

struct DenoiserEstimate {
  Eigen::VectorXd u_hat;        // arithmetic mean of exactly M recorded positions
  double acceptance_rate = 0.0; // over the M recorded proposals
  MalaState final_state;
  bool all_rejected = false;    // diagnostic: no recorded proposal was accepted
};

/// Chain-average denoiser estimate: a single MALA chain targeting the
/// posterior of X given Y_t = y, averaged over exactly M post-move positions.
/// A fresh chain starts at y / t, runs ceil(burn_in_fraction * M) extra
/// steps first (with step adaptation if enabled), and then records; a warm
/// chain records immediately with its step scale frozen. The step scale is
/// never adapted while positions are being recorded.
inline DenoiserEstimate estimate_denoiser(const TargetModel& target, double t, double sigma,
                                          const Eigen::VectorXd& y, int M,
                                          std::optional<MalaState> warm_start, Rng& rng,
                                          const DenoiserOptions& opts = {}) {
  if (M < 1) throw std::domain_error("estimate_denoiser: M must be at least 1");
  detail::require_time_sigma(t, sigma);
  detail::require_finite(y, "estimate_denoiser");
  const auto log_density = [&](const Eigen::VectorXd& x) {
    return posterior_log_density_unnorm(target, t, sigma, y, x);
  };
  const auto gradient = [&](const Eigen::VectorXd& x) {
    return posterior_grad(target, t, sigma, y, x);
  };
  double prior_var = opts.prior_variance_per_coord;
  if (!(prior_var > 0.0) && target.variance_proxy)
    prior_var = *target.variance_proxy / target.dim;
  const double scale = posterior_proposal_scale(t, sigma, prior_var);
  const int burn = static_cast<int>(std::ceil(opts.burn_in_fraction * M));

  MalaState state;
  const bool fresh = !warm_start.has_value();
  if (fresh) {
    state = make_mala_state(log_density, gradient, y / t, opts.initial_step_scale * scale,
                            opts.initial_step_scale);
    if (opts.adapt) {
      state = run_adaptive_burn_in(log_density, gradient, std::move(state), burn,
                                   opts.target_acceptance, scale, rng);
    } else {
      for (int i = 0; i < burn; ++i) state = mala_step(log_density, gradient, std::move(state), rng);
    }
  } else {
    state = std::move(*warm_start);
    // The warm state's cache refers to the previous step's posterior.
    state.log_density = log_density(state.position);
    state.grad = gradient(state.position);
    state.step_size = state.step_scale * scale;
    if (opts.warm_discard)
      for (int i = 0; i < burn; ++i) state = mala_step(log_density, gradient, std::move(state), rng);
  }

  const long accepted_before = state.accept_count;
  const long proposed_before = state.proposal_count;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(target.dim);
  for (int j = 0; j < M; ++j) {
    state = mala_step(log_density, gradient, std::move(state), rng);
    mean += state.position;
  }
  mean /= static_cast<double>(M);

  DenoiserEstimate estimate;
  estimate.u_hat = std::move(mean);
  estimate.acceptance_rate = static_cast<double>(state.accept_count - accepted_before) /
                             static_cast<double>(state.proposal_count - proposed_before);
  estimate.all_rejected = (state.accept_count == accepted_before);
  estimate.final_state = std::move(state);
  return estimate;
}

struct Eps0Estimate {
  double value = 0.0;
  double std_error = 0.0;          // approximate, from path batches
  std::vector<double> per_step_l2; // L2 error at each grid time
};

/// Time-averaged L2 denoiser-estimation error along exactly simulated
/// observation paths Y_{t_k} = t_k X + sigma B_{t_k}:
///   (1 / (t_K - t_0)) sum_k delta_k ||u_hat - u||_{L2},
/// with the L2 norm estimated over n_paths independent paths. Inner chains
/// warm-start across k exactly as the sampler does. With use_oracle set the
/// estimator is the oracle itself and the result is identically zero.
inline Eps0Estimate estimate_eps0(const TargetModel& target, const Discretization& disc,
                                  double sigma, int M, const DenoiserOptions& opts, int n_paths,
                                  Rng& rng, bool use_oracle = false) {
  disc.validate();
  if (n_paths < 1) throw std::domain_error("estimate_eps0: need at least one path");
  if (!target.has_oracle_denoiser() || !target.has_sampler())
    throw std::domain_error("estimate_eps0: target must provide an oracle denoiser and a sampler");
  const int K = disc.intervals();
  const int d = target.dim;
  const int n_batches = std::min(10, n_paths);
  std::vector<std::vector<double>> batch_err2(n_batches, std::vector<double>(K, 0.0));
  std::vector<long> batch_count(n_batches, 0);

  for (int p = 0; p < n_paths; ++p) {
    const int b = p % n_batches;
    ++batch_count[b];
    const Eigen::VectorXd x = target.sample(rng);
    Eigen::VectorXd y =
        disc.grid[0] * x + sigma * std::sqrt(disc.grid[0]) * rng.normal_vector(d);
    std::optional<MalaState> warm;
    for (int k = 0; k < K; ++k) {
      const double t_k = disc.grid[k];
      if (k > 0) {
        const double delta = t_k - disc.grid[k - 1];
        y += delta * x + sigma * std::sqrt(delta) * rng.normal_vector(d);
      }
      const Eigen::VectorXd u = target.oracle_denoiser(t_k, sigma, y);
      Eigen::VectorXd u_hat;
      if (use_oracle) {
        u_hat = u;
      } else {
        auto est = estimate_denoiser(target, t_k, sigma, y, M, std::move(warm), rng, opts);
        u_hat = std::move(est.u_hat);
        warm = std::move(est.final_state);
      }
      batch_err2[b][k] += (u_hat - u).squaredNorm();
    }
  }

  const double span = disc.horizon() - disc.t0();
  auto weighted_value = [&](const std::vector<double>& err2, double count) {
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      const double delta = disc.grid[k + 1] - disc.grid[k];
      acc += delta * std::sqrt(err2[k] / count);
    }
    return acc / span;
  };

  Eps0Estimate out;
  std::vector<double> pooled(K, 0.0);
  for (int b = 0; b < n_batches; ++b)
    for (int k = 0; k < K; ++k) pooled[k] += batch_err2[b][k];
  out.per_step_l2.resize(K);
  for (int k = 0; k < K; ++k) out.per_step_l2[k] = std::sqrt(pooled[k] / n_paths);
  out.value = weighted_value(pooled, static_cast<double>(n_paths));

  if (n_batches >= 2) {
    std::vector<double> vals(n_batches);
    double mean = 0.0;
    for (int b = 0; b < n_batches; ++b) {
      vals[b] = weighted_value(batch_err2[b], static_cast<double>(batch_count[b]));
      mean += vals[b];
    }
    mean /= n_batches;
    double var = 0.0;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= (n_batches - 1);
    out.std_error = std::sqrt(var / n_batches);
  }
  return out;
}

}  // namespace slips
