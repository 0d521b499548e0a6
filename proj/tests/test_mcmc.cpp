#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "slips/grids.hpp"
#include "slips/mcmc.hpp"
#include "slips/rng.hpp"
#include "slips/targets.hpp"

#include "oracle_utils.hpp"

using namespace slips;

namespace {

const auto gauss_log_density = [](const Eigen::VectorXd& x) { return -0.5 * x.squaredNorm(); };
const auto gauss_gradient = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };

GaussianMixture bimodal_1d() {
  GaussianMixture gmm;
  gmm.weights = Eigen::Vector2d(0.3, 0.7);
  gmm.means = {Eigen::VectorXd::Constant(1, -1.2), Eigen::VectorXd::Constant(1, 0.8)};
  gmm.component_variance = 0.5;
  return gmm;
}

}  // namespace

TEST_CASE("one MALA transition follows the Metropolis rule exactly", "[mcmc]") {
  // Recompute the whole transition from the same random draws with an
  // independent implementation of the acceptance ratio.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng_lib(seed), rng_ref(seed);
    Eigen::VectorXd x0(2);
    x0 << 0.3, -1.1;
    const double h = 0.25;
    MalaState state = make_mala_state(gauss_log_density, gauss_gradient, x0, h);
    state = mala_step(gauss_log_density, gauss_gradient, std::move(state), rng_lib);

    const Eigen::VectorXd xi = rng_ref.normal_vector(2);
    const double u = rng_ref.uniform();
    const Eigen::VectorXd prop = x0 - h * x0 + std::sqrt(2.0 * h) * xi;
    auto log_q = [&](const Eigen::VectorXd& to, const Eigen::VectorXd& from) {
      return -(to - (from - h * from)).squaredNorm() / (4.0 * h);
    };
    const double log_alpha = (-0.5 * prop.squaredNorm() + log_q(x0, prop)) -
                             (-0.5 * x0.squaredNorm() + log_q(prop, x0));
    const bool accept = std::log(u) < log_alpha;
    const Eigen::VectorXd expected = accept ? prop : x0;
    REQUIRE(state.position == expected);
    REQUIRE(state.last_accept_prob ==
            Catch::Approx(std::exp(std::min(0.0, log_alpha))).epsilon(1e-14));
    REQUIRE(state.accept_count == (accept ? 1 : 0));
    REQUIRE(state.proposal_count == 1);
  }
}

TEST_CASE("MALA leaves the standard normal invariant", "[mcmc]") {
  Rng rng(17);
  MalaState state =
      make_mala_state(gauss_log_density, gauss_gradient, Eigen::VectorXd::Zero(1), 0.8);
  const int n = 200000;
  std::vector<double> second_moment(n);
  for (int i = 0; i < n; ++i) {
    state = mala_step(gauss_log_density, gauss_gradient, std::move(state), rng);
    second_moment[i] = state.position[0] * state.position[0];
  }
  const auto m2 = oracle::batch_mean_se(second_moment);
  REQUIRE(std::abs(m2.mean - 1.0) < 4.0 * m2.se);
  const double acceptance = static_cast<double>(state.accept_count) / state.proposal_count;
  REQUIRE(acceptance > 0.05);
  REQUIRE(acceptance < 0.999);
}

TEST_CASE("MALA treats density cutoffs as rejections", "[mcmc]") {
  // Log density is -inf outside [-1, 1]; the chain must stay inside and
  // never produce a non-finite state.
  const auto boxed = [](const Eigen::VectorXd& x) {
    if (std::abs(x[0]) > 1.0) return -std::numeric_limits<double>::infinity();
    return 0.0;
  };
  const auto zero_grad = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Zero(x.size()); };
  Rng rng(3);
  MalaState state = make_mala_state(boxed, zero_grad, Eigen::VectorXd::Zero(1), 0.9);
  for (int i = 0; i < 2000; ++i) {
    state = mala_step(boxed, zero_grad, std::move(state), rng);
    REQUIRE(std::abs(state.position[0]) <= 1.0);
    REQUIRE(std::isfinite(state.log_density));
  }
  REQUIRE(state.accept_count > 0);
  REQUIRE(state.accept_count < state.proposal_count);
}

TEST_CASE("unadjusted Langevin reaches its biased stationary variance", "[mcmc]") {
  // For N(0,1) the update is x' = (1 - lambda) x + sqrt(2 lambda) xi, an
  // autoregressive process with stationary variance 2 lambda / (1 - (1 -
  // lambda)^2) = 2 / (2 - lambda). At lambda = 0.5 that is 4/3: the step
  // size bias is real and must appear.
  const auto score = [](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  Rng rng(11);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  const double lambda = 0.5;
  const int n = 400000;
  std::vector<double> sq(n);
  for (int i = 0; i < n; ++i) {
    x = ula_step(score, x, lambda, rng);
    sq[i] = x[0] * x[0];
  }
  const auto m2 = oracle::batch_mean_se(sq);
  REQUIRE(std::abs(m2.mean - 4.0 / 3.0) < 4.0 * m2.se);
  // The biased value is clearly distinguishable from the exact variance 1.
  REQUIRE(m2.mean - 1.0 > 10.0 * m2.se);
}

TEST_CASE("unadjusted Langevin refuses non-finite scores", "[mcmc]") {
  const auto bad_score = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd(Eigen::VectorXd::Constant(x.size(),
                                                     std::numeric_limits<double>::quiet_NaN()));
  };
  Rng rng(1);
  REQUIRE_THROWS_AS(ula_step(bad_score, Eigen::VectorXd::Zero(2), 0.1, rng), std::runtime_error);
  REQUIRE_THROWS_AS(ula_step([](const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); },
                             Eigen::VectorXd::Zero(2), 0.0, rng),
                    std::domain_error);
}

TEST_CASE("step adaptation recovers from badly scaled starts", "[mcmc]") {
  for (const double bad_scale : {1e-3, 1e3}) {
    Rng rng(23);
    MalaState state = make_mala_state(gauss_log_density, gauss_gradient,
                                      Eigen::VectorXd::Zero(3), bad_scale, bad_scale);
    state = run_adaptive_burn_in(gauss_log_density, gauss_gradient, std::move(state), 2000, 0.574,
                                 1.0, rng);
    const long before_accepts = state.accept_count;
    const long before_props = state.proposal_count;
    for (int i = 0; i < 4000; ++i)
      state = mala_step(gauss_log_density, gauss_gradient, std::move(state), rng);
    const double acceptance = static_cast<double>(state.accept_count - before_accepts) /
                              static_cast<double>(state.proposal_count - before_props);
    REQUIRE(acceptance > 0.45);
    REQUIRE(acceptance < 0.72);
  }
}

TEST_CASE("posterior proposal scale blends prior and likelihood precision", "[mcmc]") {
  REQUIRE(posterior_proposal_scale(2.0, 1.0, 0.5) == Catch::Approx(1.0 / (2.0 + 2.0)));
  // Unknown prior scale: fall back to sigma^2 as the prior variance.
  REQUIRE(posterior_proposal_scale(3.0, 2.0, 0.0) ==
          Catch::Approx(1.0 / (0.25 + 0.75)).epsilon(1e-15));
  // Likelihood dominates at large t, prior at small t.
  REQUIRE(posterior_proposal_scale(1e6, 1.0, 1.0) == Catch::Approx(1.0 / (1.0 + 1e6)));
  REQUIRE(posterior_proposal_scale(1e-9, 1.0, 0.25) == Catch::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("denoiser estimate records exactly M positions", "[mcmc]") {
  const TargetModel target = make_target(bimodal_1d());
  const double sigma = std::sqrt(*target.variance_proxy);
  Eigen::VectorXd y(1);
  y[0] = 1.7;
  const int M = 37;

  Rng rng(5);
  const DenoiserEstimate fresh = estimate_denoiser(target, 2.0, sigma, y, M, std::nullopt, rng);
  // ceil(0.2 * 37) = 8 burn-in proposals plus exactly M recorded ones.
  REQUIRE(fresh.final_state.proposal_count == M + 8);

  Rng rng2(6);
  const DenoiserEstimate warm =
      estimate_denoiser(target, 2.2, sigma, y, M, fresh.final_state, rng2);
  REQUIRE(warm.final_state.proposal_count == fresh.final_state.proposal_count + M);

  DenoiserOptions discard;
  discard.warm_discard = true;
  Rng rng3(7);
  const DenoiserEstimate warm_discarded =
      estimate_denoiser(target, 2.2, sigma, y, M, fresh.final_state, rng3, discard);
  REQUIRE(warm_discarded.final_state.proposal_count == fresh.final_state.proposal_count + M + 8);
}

TEST_CASE("warm starts refresh the cached posterior state", "[mcmc]") {
  // A warm chain whose cache referred to the previous (t, y) must score its
  // position under the new posterior before proposing.
  const TargetModel target = make_target(bimodal_1d());
  const double sigma = std::sqrt(*target.variance_proxy);
  Eigen::VectorXd y_old(1), y_new(1);
  y_old[0] = 0.4;
  y_new[0] = 6.0;
  Rng rng(9);
  const DenoiserEstimate first =
      estimate_denoiser(target, 1.0, sigma, y_old, 20, std::nullopt, rng);
  const DenoiserEstimate second =
      estimate_denoiser(target, 3.0, sigma, y_new, 20, first.final_state, rng);
  const double expected_log_density =
      posterior_log_density_unnorm(target, 3.0, sigma, y_new, second.final_state.position);
  REQUIRE(second.final_state.log_density == Catch::Approx(expected_log_density).epsilon(1e-12));
}

TEST_CASE("denoiser estimate converges to the oracle value", "[mcmc]") {
  const GaussianMixture gmm = bimodal_1d();
  const TargetModel target = make_target(gmm);
  const double sigma = std::sqrt(*target.variance_proxy);
  const double t = 12.0;
  Eigen::VectorXd y(1);
  y[0] = t * 0.75;
  const double u_exact = gmm_oracle_denoiser(gmm, t, sigma, y)[0];
  std::vector<double> estimates;
  for (std::uint64_t r = 0; r < 16; ++r) {
    Rng rng = Rng::derive(100, r);
    estimates.push_back(
        estimate_denoiser(target, t, sigma, y, 4000, std::nullopt, rng).u_hat[0]);
  }
  const auto agg = oracle::mean_se(estimates);
  REQUIRE(std::abs(agg.mean - u_exact) < std::max(4.0 * agg.se, 0.01));
}

TEST_CASE("denoiser estimate flags fully rejected chains", "[mcmc]") {
  // A density that is finite only in a tiny ball around the start: every
  // proposal at a sane step size lands outside and is rejected.
  TargetModel target;
  target.dim = 1;
  target.log_density_unnorm = [](const Eigen::VectorXd& x) {
    return std::abs(x[0] - 1.0) < 1e-12 ? 0.0 : -std::numeric_limits<double>::infinity();
  };
  target.grad_log_density = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Zero(x.size());
  };
  target.variance_proxy = 1.0;
  Rng rng(4);
  Eigen::VectorXd y(1);
  y[0] = 1.0;
  DenoiserOptions opts;
  opts.adapt = false;  // keep the step size sane instead of shrinking to fit
  const DenoiserEstimate est = estimate_denoiser(target, 1.0, 1.0, y, 50, std::nullopt, rng, opts);
  REQUIRE(est.all_rejected);
  REQUIRE(est.acceptance_rate == 0.0);
  REQUIRE(est.u_hat[0] == 1.0);  // the chain never moved off y / t
}

TEST_CASE("denoiser estimates are reproducible from the seed", "[mcmc]") {
  const TargetModel target = make_target(bimodal_1d());
  const double sigma = std::sqrt(*target.variance_proxy);
  Eigen::VectorXd y(1);
  y[0] = -0.9;
  Rng a(42), b(42);
  const DenoiserEstimate ea = estimate_denoiser(target, 1.5, sigma, y, 200, std::nullopt, a);
  const DenoiserEstimate eb = estimate_denoiser(target, 1.5, sigma, y, 200, std::nullopt, b);
  REQUIRE(ea.u_hat[0] == eb.u_hat[0]);
  REQUIRE(ea.final_state.position[0] == eb.final_state.position[0]);
  REQUIRE(ea.acceptance_rate == eb.acceptance_rate);
}

TEST_CASE("estimation error is zero in oracle mode and positive otherwise", "[mcmc]") {
  const GaussianMixture gmm = bimodal_1d();
  const TargetModel target = make_target(gmm);
  const double sigma = std::sqrt(*target.variance_proxy);
  const Discretization disc = log_snr_grid(0.1, 50.0, 12);
  DenoiserOptions opts;
  Rng rng(8);
  const Eps0Estimate oracle_err = estimate_eps0(target, disc, sigma, 30, opts, 32, rng, true);
  REQUIRE(oracle_err.value == 0.0);
  REQUIRE(oracle_err.per_step_l2.size() == 12);
  for (double e : oracle_err.per_step_l2) REQUIRE(e == 0.0);

  Rng rng2(8);
  const Eps0Estimate mala_err = estimate_eps0(target, disc, sigma, 30, opts, 32, rng2, false);
  REQUIRE(mala_err.value > 0.0);
  REQUIRE(mala_err.std_error > 0.0);
  REQUIRE(mala_err.per_step_l2.size() == 12);
}

TEST_CASE("estimation error shrinks with longer inner chains", "[mcmc]") {
  const GaussianMixture gmm = bimodal_1d();
  const TargetModel target = make_target(gmm);
  const double sigma = std::sqrt(*target.variance_proxy);
  const Discretization disc = log_snr_grid(0.1, 50.0, 10);
  DenoiserOptions opts;
  Rng r1(21), r2(22);
  const Eps0Estimate short_chain = estimate_eps0(target, disc, sigma, 20, opts, 96, r1);
  const Eps0Estimate long_chain = estimate_eps0(target, disc, sigma, 320, opts, 96, r2);
  const double slack = 2.0 * std::sqrt(short_chain.std_error * short_chain.std_error +
                                       long_chain.std_error * long_chain.std_error);
  REQUIRE(long_chain.value < short_chain.value + slack);
  REQUIRE(long_chain.value < short_chain.value);  // expected decisively at 16x the budget
}
