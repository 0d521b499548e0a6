#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "slips/slips.hpp"
#include "slips/targets.hpp"

#include "oracle_utils.hpp"

using namespace slips;

namespace {

GaussianMixture single_gaussian(double mean, double variance, int dim = 1) {
  GaussianMixture gmm;
  gmm.weights = Eigen::VectorXd::Constant(1, 1.0);
  gmm.means = {Eigen::VectorXd::Constant(dim, mean)};
  gmm.component_variance = variance;
  return gmm;
}

// Per-coordinate affine form of the single-Gaussian denoiser:
// u_t(y) = a(t) + b(t) y with precision p(t) = 1/s^2 + t/sigma^2.
struct AffineDenoiser {
  double a = 0.0;
  double b = 0.0;
};

AffineDenoiser affine_denoiser(double m, double s2, double sigma, double t) {
  const double p = 1.0 / s2 + t / (sigma * sigma);
  return {m / (s2 * p), 1.0 / (sigma * sigma * p)};
}

}  // namespace

TEST_CASE("configuration validation", "[slips]") {
  SlipsConfig config;
  REQUIRE_NOTHROW(config.validate());
  SlipsConfig bad = config;
  bad.t0 = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
  bad = config;
  bad.T = bad.t0;
  REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
  bad = config;
  bad.K = 0;
  REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
  bad = config;
  bad.M = 0;
  REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
  bad = config;
  bad.N = -1;
  REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
  bad = config;
  bad.burn_in_fraction = -0.1;
  REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
  bad = config;
  bad.mala_step = 0.0;
  REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
  bad = config;
  bad.sigma = -1.0;
  REQUIRE_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("noise scale resolution", "[slips]") {
  const TargetModel target = make_target(symmetric_pair_mixture(2, 1.0, 1.0));
  SlipsConfig config;
  // Auto: sqrt(R^2 / d) with R^2 = d s^2 + d c^2 = 4, so sigma = sqrt(2).
  REQUIRE(resolve_sigma(target, config) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-15));
  config.sigma = 0.7;
  REQUIRE(resolve_sigma(target, config) == 0.7);

  TargetModel bare;
  bare.dim = 1;
  bare.log_density_unnorm = [](const Eigen::VectorXd&) { return 0.0; };
  bare.grad_log_density = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); };
  SlipsConfig no_sigma;
  REQUIRE_THROWS_AS(resolve_sigma(bare, no_sigma), std::domain_error);
}

TEST_CASE("grid construction follows the configured kind", "[slips]") {
  SlipsConfig config;
  config.t0 = 0.1;
  config.T = 10.0;
  config.K = 5;
  config.grid_kind = GridKind::log_snr;
  const Discretization geo = build_grid(config);
  REQUIRE(geo.kind == GridKind::log_snr);
  REQUIRE(geo.intervals() == 5);
  REQUIRE(geo.grid[1] / geo.grid[0] == Catch::Approx(std::pow(100.0, 0.2)).epsilon(1e-12));
  config.grid_kind = GridKind::uniform;
  const Discretization uni = build_grid(config);
  REQUIRE(uni.kind == GridKind::uniform);
  REQUIRE(uni.grid[1] - uni.grid[0] == Catch::Approx((10.0 - 0.1) / 5.0).epsilon(1e-12));
}

TEST_CASE("a run produces full traces with consistent shapes", "[slips]") {
  const TargetModel target = make_target(symmetric_pair_mixture(2, 1.0, 1.0));
  SlipsConfig config;
  config.t0 = 0.05;
  config.T = 50.0;
  config.K = 30;
  config.M = 20;
  config.N = 10;
  config.denoiser_mode = DenoiserMode::oracle;
  config.seed = 3;
  Rng rng = Rng::derive(config.seed, 0);
  const RunResult run = run_slips(target, config, rng, /*keep_trace=*/true);
  REQUIRE(run.states.size() == 31);
  REQUIRE(run.steps.size() == 30);
  REQUIRE(run.sample.size() == 2);
  REQUIRE(run.sample[0] == run.states.back()[0] / config.T);
  REQUIRE(run.sample[1] == run.states.back()[1] / config.T);
  const Discretization grid = build_grid(config);
  for (int k = 0; k < 30; ++k) {
    REQUIRE(run.steps[k].k == k);
    REQUIRE(run.steps[k].t == grid.grid[k]);
    REQUIRE(run.steps[k].state.allFinite());
    REQUIRE(run.steps[k].u_hat.allFinite());
    REQUIRE(std::isnan(run.steps[k].acceptance));  // oracle mode has no chains
  }

  Rng rng2 = Rng::derive(config.seed, 0);
  const RunResult lean = run_slips(target, config, rng2, /*keep_trace=*/false);
  REQUIRE(lean.states.empty());
  REQUIRE(lean.steps.empty());
  REQUIRE(lean.sample == run.sample);
}

TEST_CASE("runs are reproducible and runs differ across indices", "[slips]") {
  const TargetModel target = make_target(symmetric_pair_mixture(2, 1.0, 1.0));
  SlipsConfig config;
  config.t0 = 0.05;
  config.T = 50.0;
  config.K = 20;
  config.M = 15;
  config.N = 8;
  config.seed = 11;
  Rng a = Rng::derive(config.seed, 4);
  Rng b = Rng::derive(config.seed, 4);
  Rng c = Rng::derive(config.seed, 5);
  const RunResult ra = run_slips(target, config, a, false);
  const RunResult rb = run_slips(target, config, b, false);
  const RunResult rc = run_slips(target, config, c, false);
  REQUIRE(ra.sample == rb.sample);
  REQUIRE(ra.sample != rc.sample);
}

TEST_CASE("batches are identical for any worker count", "[slips]") {
  const TargetModel target = make_target(symmetric_pair_mixture(2, 1.0, 1.0));
  SlipsConfig config;
  config.t0 = 0.05;
  config.T = 50.0;
  config.K = 20;
  config.M = 15;
  config.N = 8;
  config.seed = 29;
  const BatchResult serial = run_batch(target, config, 12, 1);
  const BatchResult threaded = run_batch(target, config, 12, 3);
  REQUIRE(serial.runs.size() == 12);
  REQUIRE(threaded.runs.size() == 12);
  const Eigen::MatrixXd ms = serial.sample_matrix();
  const Eigen::MatrixXd mt = threaded.sample_matrix();
  REQUIRE(ms == mt);
  for (int i = 0; i < 12; ++i) REQUIRE(serial.runs[i].run_index == i);
}

TEST_CASE("oracle-mode ensemble matches the analytic linear recursion", "[slips]") {
  // Single-Gaussian target: the denoiser is affine, so the outer recursion is
  // linear-Gaussian and the law of the final state is available in closed
  // form. Propagating mean and variance through the exact update is an
  // independent re-derivation of what the sampler should produce.
  const double m = 0.7, s2 = 0.8;
  const GaussianMixture gmm = single_gaussian(m, s2, 2);
  const TargetModel target = make_target(gmm);
  SlipsConfig config;
  config.t0 = 0.05;
  config.T = 100.0;
  config.K = 40;
  config.M = 1;
  config.N = 0;
  config.denoiser_mode = DenoiserMode::oracle;
  config.init_mode = InitMode::exact;
  config.seed = 17;
  const double sigma = resolve_sigma(target, config);
  REQUIRE(sigma == Catch::Approx(std::sqrt(s2)).epsilon(1e-15));

  const Discretization grid = build_grid(config);
  double mu = config.t0 * m;
  double v = config.t0 * config.t0 * s2 + sigma * sigma * config.t0;
  for (int k = 0; k < config.K; ++k) {
    const double t = grid.grid[k];
    const double delta = grid.grid[k + 1] - grid.grid[k];
    const AffineDenoiser u = affine_denoiser(m, s2, sigma, t);
    mu = mu + delta * (u.a + u.b * mu);
    const double growth = 1.0 + delta * u.b;
    v = growth * growth * v + sigma * sigma * delta;
  }
  const double mean_pred = mu / config.T;
  const double var_pred = v / (config.T * config.T);

  const int n_runs = 2000;
  const BatchResult batch = run_batch(target, config, n_runs, 1);
  REQUIRE(batch.failures.empty());
  const Eigen::MatrixXd samples = batch.sample_matrix();
  for (int j = 0; j < 2; ++j) {
    std::vector<double> xs(n_runs), sq(n_runs);
    for (int i = 0; i < n_runs; ++i) {
      xs[i] = samples(i, j);
      sq[i] = (samples(i, j) - mean_pred) * (samples(i, j) - mean_pred);
    }
    const auto mean_est = oracle::mean_se(xs);
    const auto var_est = oracle::mean_se(sq);
    REQUIRE(std::abs(mean_est.mean - mean_pred) < 4.0 * mean_est.se);
    REQUIRE(std::abs(var_est.mean - var_pred) < 4.0 * var_est.se);
  }
}

TEST_CASE("initialization ladder reaches its autoregressive fixed point", "[slips]") {
  // With an affine score the ladder is a discrete Ornstein-Uhlenbeck
  // process: state' = A state + lambda c + sqrt(2 lambda) noise with
  // A = 1 + lambda g. Its stationary variance 2 lambda / (1 - A^2) exceeds
  // the exact time-t0 variance: the unadjusted-step bias is part of the
  // design and must show up at the predicted size.
  const double m = 0.5, s2 = 1.0;
  const GaussianMixture gmm = single_gaussian(m, s2, 1);
  const TargetModel target = make_target(gmm);
  SlipsConfig config;
  config.t0 = 0.2;
  config.N = 50;
  config.denoiser_mode = DenoiserMode::oracle;
  config.seed = 23;
  const double sigma = resolve_sigma(target, config);
  REQUIRE(sigma == 1.0);

  const double lambda = sigma * sigma * config.t0 / 2.0;
  const AffineDenoiser u = affine_denoiser(m, s2, sigma, config.t0);
  const double g = (config.t0 * u.b - 1.0) / (sigma * sigma * config.t0);
  const double c = u.a / (sigma * sigma);
  const double A = 1.0 + lambda * g;
  REQUIRE(std::abs(A) < 1.0);
  const double mean_fixed = lambda * c / (1.0 - A);
  const double var_fixed = 2.0 * lambda / (1.0 - A * A);
  REQUIRE(mean_fixed == Catch::Approx(config.t0 * m).epsilon(1e-12));
  const double var_exact = config.t0 * config.t0 * s2 + sigma * sigma * config.t0;
  REQUIRE(var_fixed > 1.2 * var_exact);  // the bias is material at this t0

  const int n = 3000;
  std::vector<double> draws(n), sq(n);
  Rng rng(91);
  for (int i = 0; i < n; ++i) {
    draws[i] = initialize(target, config, sigma, rng).state[0];
    sq[i] = (draws[i] - mean_fixed) * (draws[i] - mean_fixed);
  }
  const auto mean_est = oracle::mean_se(draws);
  const auto var_est = oracle::mean_se(sq);
  REQUIRE(std::abs(mean_est.mean - mean_fixed) < 4.0 * mean_est.se);
  REQUIRE(std::abs(var_est.mean - var_fixed) < 4.0 * var_est.se);
  // Distinguishable from the exact law: the ladder is biased by design.
  REQUIRE(var_est.mean - var_exact > 4.0 * var_est.se);
}

TEST_CASE("exact initialization draws from the true time-t0 law", "[slips]") {
  const double m = 0.5, s2 = 1.0;
  const GaussianMixture gmm = single_gaussian(m, s2, 1);
  const TargetModel target = make_target(gmm);
  SlipsConfig config;
  config.t0 = 0.2;
  config.T = 10.0;
  config.K = 5;
  config.M = 1;
  config.N = 0;
  config.denoiser_mode = DenoiserMode::oracle;
  config.init_mode = InitMode::exact;
  const double sigma = resolve_sigma(target, config);
  const double var_exact = config.t0 * config.t0 * s2 + sigma * sigma * config.t0;

  const int n = 4000;
  std::vector<double> sq(n);
  Rng rng(57);
  for (int i = 0; i < n; ++i) {
    const RunResult run = run_slips(target, config, rng, true);
    const double y0 = run.states.front()[0];
    sq[i] = (y0 - config.t0 * m) * (y0 - config.t0 * m);
  }
  const auto var_est = oracle::mean_se(sq);
  REQUIRE(std::abs(var_est.mean - var_exact) < 4.0 * var_est.se);
}

TEST_CASE("acceptance diagnostics are populated in chain mode only", "[slips]") {
  const TargetModel target = make_target(symmetric_pair_mixture(1, 1.0, 1.0));
  SlipsConfig config;
  config.t0 = 0.1;
  config.T = 20.0;
  config.K = 15;
  config.M = 25;
  config.N = 12;
  config.seed = 5;

  config.denoiser_mode = DenoiserMode::mala;
  Rng rng = Rng::derive(config.seed, 0);
  const RunResult mala_run = run_slips(target, config, rng, true);
  REQUIRE(std::isfinite(mala_run.init_mean_acceptance));
  REQUIRE(mala_run.init_mean_acceptance > 0.0);
  REQUIRE(mala_run.low_acceptance_fraction >= 0.0);
  REQUIRE(mala_run.low_acceptance_fraction <= 1.0);
  for (const auto& step : mala_run.steps) {
    REQUIRE(step.acceptance >= 0.0);
    REQUIRE(step.acceptance <= 1.0);
  }

  config.denoiser_mode = DenoiserMode::oracle;
  Rng rng2 = Rng::derive(config.seed, 0);
  const RunResult oracle_run = run_slips(target, config, rng2, true);
  REQUIRE(std::isnan(oracle_run.init_mean_acceptance));
  REQUIRE(oracle_run.low_acceptance_fraction == 0.0);
}

TEST_CASE("warm-started and cold inner chains both sample correctly", "[slips]") {
  const TargetModel target = make_target(symmetric_pair_mixture(1, 1.0, 1.0));
  SlipsConfig config;
  config.t0 = 0.1;
  config.T = 20.0;
  config.K = 15;
  config.M = 25;
  config.N = 12;
  config.seed = 31;
  config.reuse_init_chain = true;
  Rng a = Rng::derive(config.seed, 0);
  const RunResult warm = run_slips(target, config, a, false);
  config.reuse_init_chain = false;
  Rng b = Rng::derive(config.seed, 0);
  const RunResult cold = run_slips(target, config, b, false);
  REQUIRE(warm.sample.allFinite());
  REQUIRE(cold.sample.allFinite());
  REQUIRE(warm.sample != cold.sample);  // different chain histories
}

TEST_CASE("failures are isolated per run", "[slips]") {
  GaussianMixture gmm = symmetric_pair_mixture(1, 1.0, 1.0);
  TargetModel target = make_target(gmm);
  target.oracle_denoiser = [](double, double, const Eigen::VectorXd&) -> Eigen::VectorXd {
    throw std::runtime_error("synthetic oracle failure");
  };
  SlipsConfig config;
  config.t0 = 0.1;
  config.T = 10.0;
  config.K = 5;
  config.M = 1;
  config.N = 0;
  config.denoiser_mode = DenoiserMode::oracle;
  config.init_mode = InitMode::exact;
  const BatchResult batch = run_batch(target, config, 6, 2);
  REQUIRE(batch.n_requested == 6);
  REQUIRE(batch.runs.empty());
  REQUIRE(batch.failures.size() == 6);
  for (const auto& failure : batch.failures) {
    REQUIRE(failure.message.find("step") != std::string::npos);
    REQUIRE(failure.message.find("synthetic oracle failure") != std::string::npos);
  }
  REQUIRE(batch.sample_matrix().rows() == 0);
}

TEST_CASE("oracle mode demands an oracle and exact init demands a sampler", "[slips]") {
  TargetModel bare;
  bare.dim = 1;
  bare.log_density_unnorm = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
  bare.grad_log_density = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  bare.variance_proxy = 1.0;
  SlipsConfig config;
  config.denoiser_mode = DenoiserMode::oracle;
  Rng rng(1);
  REQUIRE_THROWS_AS(run_slips(bare, config, rng, false), std::domain_error);
  config.denoiser_mode = DenoiserMode::mala;
  config.init_mode = InitMode::exact;
  REQUIRE_THROWS_AS(run_slips(bare, config, rng, false), std::domain_error);
}
