#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "slips/targets.hpp"

namespace slips {

/// Default observation noise scale: sigma^2 = variance_proxy / dim, which
/// puts the signal-to-noise ratio of Y_t at exactly t.
inline double sigma_default(double variance_proxy, int dim) {
  if (!(variance_proxy > 0.0)) throw std::domain_error("sigma_default: variance proxy must be positive");
  if (dim < 1) throw std::domain_error("sigma_default: dim must be positive");
  return std::sqrt(variance_proxy / static_cast<double>(dim));
}

/// Unnormalized log density of X given the observation Y_t = y:
/// log pi(x) - ||y - t x||^2 / (2 t sigma^2).
inline double posterior_log_density_unnorm(const TargetModel& target, double t, double sigma,
                                           const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
  detail::require_time_sigma(t, sigma);
  detail::require_finite(x, "posterior_log_density_unnorm");
  const double lp = target.log_density_unnorm(x);
  if (std::isnan(lp)) throw std::domain_error("posterior_log_density_unnorm: target log density is NaN");
  return lp - (y - t * x).squaredNorm() / (2.0 * t * sigma * sigma);
}

/// Gradient in x of the posterior log density. The quadratic term
/// -||y - t x||^2 / (2 t sigma^2) differentiates to t (y - t x) / (t sigma^2),
/// and the t cancels, leaving (y - t x) / sigma^2.
inline Eigen::VectorXd posterior_grad(const TargetModel& target, double t, double sigma,
                                      const Eigen::VectorXd& y, const Eigen::VectorXd& x) {
  detail::require_time_sigma(t, sigma);
  detail::require_finite(x, "posterior_grad");
  return target.grad_log_density(x) + (y - t * x) / (sigma * sigma);
}

/// Score of the observation marginal recovered from a denoiser value:
/// grad log p_t(y) = (t u - y) / (sigma^2 t).
inline Eigen::VectorXd tweedie_score(double t, double sigma, const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& u) {
  detail::require_time_sigma(t, sigma);
  return (t * u - y) / (sigma * sigma * t);
}

}  // namespace slips
