#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "slips/numerics.hpp"
#include "slips/rng.hpp"

namespace slips {

namespace detail {

inline void require_finite(const Eigen::VectorXd& x, const char* what) {
  if (!x.allFinite()) throw std::domain_error(std::string(what) + ": non-finite input");
}

inline void require_time_sigma(double t, double sigma) {
  if (!(t > 0.0)) throw std::domain_error("observation time t must be positive");
  if (!(sigma > 0.0)) throw std::domain_error("noise scale sigma must be positive");
}

}  // namespace detail

/// Target distribution as consumed by the samplers: an unnormalized log
/// density with gradient, plus optional closed-form quantities. The optional
/// members feed oracle pipelines, verification checks, and metric ground
/// truth; they are empty when the target does not provide them.
struct TargetModel {
  int dim = 0;
  std::function<double(const Eigen::VectorXd&)> log_density_unnorm;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_log_density;

  /// E||X - E[X]||^2 when known.
  std::optional<double> variance_proxy;
  /// E[X] when known.
  std::optional<Eigen::VectorXd> mean;

  /// Exact posterior mean E[X | Y_t = y] for the observation Y_t = tX + noise
  /// with per-coordinate noise variance t * sigma^2. Empty when unavailable.
  std::function<Eigen::VectorXd(double t, double sigma, const Eigen::VectorXd& y)>
      oracle_denoiser;
  /// Exact trace of Cov(X | Y_t = y). Empty when unavailable.
  std::function<double(double t, double sigma, const Eigen::VectorXd& y)>
      oracle_posterior_trace_cov;
  /// Exact draw from the target. Empty when unavailable.
  std::function<Eigen::VectorXd(Rng&)> sample;

  bool has_oracle_denoiser() const { return static_cast<bool>(oracle_denoiser); }
  bool has_sampler() const { return static_cast<bool>(sample); }
};

/// Gaussian mixture with isotropic components sharing one variance.
/// Weights must be nonnegative and sum to 1 (tolerance 1e-12); all means
/// share one dimension.
struct GaussianMixture {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> means;
  double component_variance = 1.0;  // s^2, shared across components

  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }

  void validate() const {
    if (means.empty()) throw std::domain_error("GaussianMixture: no components");
    if (weights.size() != static_cast<Eigen::Index>(means.size()))
      throw std::domain_error("GaussianMixture: weights/means size mismatch");
    if (!(component_variance > 0.0))
      throw std::domain_error("GaussianMixture: component variance must be positive");
    const Eigen::Index d = means.front().size();
    if (d < 1) throw std::domain_error("GaussianMixture: zero-dimensional mean");
    for (const auto& m : means) {
      if (m.size() != d) throw std::domain_error("GaussianMixture: mean dimension mismatch");
      detail::require_finite(m, "GaussianMixture mean");
    }
    double total = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (!(weights[i] >= 0.0)) throw std::domain_error("GaussianMixture: negative weight");
      total += weights[i];
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::domain_error("GaussianMixture: weights must sum to 1");
  }
};

/// Normalized log density. Component terms are combined in log space, so
/// underflow of a far-away component to weight exactly 0 is harmless.
inline double gmm_log_density(const GaussianMixture& gmm, const Eigen::VectorXd& x) {
  gmm.validate();
  detail::require_finite(x, "gmm_log_density");
  if (x.size() != gmm.dim()) throw std::domain_error("gmm_log_density: dimension mismatch");
  const double s2 = gmm.component_variance;
  Eigen::VectorXd logits(gmm.weights.size());
  for (Eigen::Index i = 0; i < gmm.weights.size(); ++i)
    logits[i] = std::log(gmm.weights[i]) + log_normal_pdf_iso(x, gmm.means[i], s2);
  return log_sum_exp(logits);
}

/// Gradient of the log density: sum_i r_i(x) (m_i - x) / s^2 with softmax
/// responsibilities r_i.
inline Eigen::VectorXd gmm_grad_log_density(const GaussianMixture& gmm,
                                            const Eigen::VectorXd& x) {
  gmm.validate();
  detail::require_finite(x, "gmm_grad_log_density");
  if (x.size() != gmm.dim())
    throw std::domain_error("gmm_grad_log_density: dimension mismatch");
  const double s2 = gmm.component_variance;
  const Eigen::Index n = gmm.weights.size();
  Eigen::VectorXd logits(n);
  for (Eigen::Index i = 0; i < n; ++i)
    logits[i] = std::log(gmm.weights[i]) + log_normal_pdf_iso(x, gmm.means[i], s2);
  const double lse = log_sum_exp(logits);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = std::exp(logits[i] - lse);
    if (r > 0.0) g += r * (gmm.means[i] - x);
  }
  return g / s2;
}

inline Eigen::VectorXd gmm_mean(const GaussianMixture& gmm) {
  gmm.validate();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(gmm.dim());
  for (Eigen::Index i = 0; i < gmm.weights.size(); ++i) m += gmm.weights[i] * gmm.means[i];
  return m;
}

/// E||X - E[X]||^2 = d s^2 + sum_i w_i ||m_i - m_bar||^2, exact.
inline double gmm_variance_proxy(const GaussianMixture& gmm) {
  gmm.validate();
  const Eigen::VectorXd m_bar = gmm_mean(gmm);
  double spread = 0.0;
  for (Eigen::Index i = 0; i < gmm.weights.size(); ++i)
    spread += gmm.weights[i] * (gmm.means[i] - m_bar).squaredNorm();
  return gmm.dim() * gmm.component_variance + spread;
}

inline Eigen::VectorXd gmm_sample(const GaussianMixture& gmm, Rng& rng) {
  gmm.validate();
  const double u = rng.uniform();
  double acc = 0.0;
  Eigen::Index pick = gmm.weights.size() - 1;
  for (Eigen::Index i = 0; i < gmm.weights.size(); ++i) {
    acc += gmm.weights[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  return gmm.means[pick] + std::sqrt(gmm.component_variance) * rng.normal_vector(gmm.dim());
}

/// Monte Carlo estimate of E||grad log pi(X)||^2 under the mixture.
inline double gmm_score_norm_sq(const GaussianMixture& gmm, long n_samples, Rng& rng) {
  if (n_samples < 1) throw std::domain_error("gmm_score_norm_sq: need at least one sample");
  double acc = 0.0;
  for (long i = 0; i < n_samples; ++i)
    acc += gmm_grad_log_density(gmm, gmm_sample(gmm, rng)).squaredNorm();
  return acc / static_cast<double>(n_samples);
}

namespace detail {

struct PosteriorMixture {
  Eigen::VectorXd weights;                // responsibilities of y per component
  std::vector<Eigen::VectorXd> means;     // per-component posterior means
  double var = 0.0;                       // shared per-coordinate posterior variance
};

// Conjugate update for the observation Y_t = tX + N(0, t sigma^2 I) when X is
// mixture-distributed: the posterior is again a mixture of isotropic
// Gaussians with per-coordinate variance 1 / (1/s^2 + t/sigma^2) and weights
// tilted by the marginal likelihood of y under each component.
inline PosteriorMixture posterior_mixture(const GaussianMixture& gmm, double t, double sigma,
                                          const Eigen::VectorXd& y) {
  gmm.validate();
  require_time_sigma(t, sigma);
  require_finite(y, "posterior_mixture");
  if (y.size() != gmm.dim()) throw std::domain_error("posterior_mixture: dimension mismatch");
  const double s2 = gmm.component_variance;
  const double sig2 = sigma * sigma;
  const double precision = 1.0 / s2 + t / sig2;
  const double marginal_var = t * sig2 + t * t * s2;  // per coordinate, given a component
  const Eigen::Index n = gmm.weights.size();
  Eigen::VectorXd logits(n);
  for (Eigen::Index i = 0; i < n; ++i)
    logits[i] = std::log(gmm.weights[i]) + log_normal_pdf_iso(y, t * gmm.means[i], marginal_var);
  const double lse = log_sum_exp(logits);
  PosteriorMixture post;
  post.weights.resize(n);
  post.means.reserve(n);
  post.var = 1.0 / precision;
  for (Eigen::Index i = 0; i < n; ++i) {
    post.weights[i] = std::exp(logits[i] - lse);
    post.means.push_back((gmm.means[i] / s2 + y / sig2) / precision);
  }
  return post;
}

}  // namespace detail

/// Exact denoiser E[X | Y_t = y] for a Gaussian mixture target.
inline Eigen::VectorXd gmm_oracle_denoiser(const GaussianMixture& gmm, double t, double sigma,
                                           const Eigen::VectorXd& y) {
  const auto post = detail::posterior_mixture(gmm, t, sigma, y);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(y.size());
  for (Eigen::Index i = 0; i < post.weights.size(); ++i) u += post.weights[i] * post.means[i];
  return u;
}

/// Exact Tr Cov(X | Y_t = y): within-component part d / (1/s^2 + t/sigma^2)
/// plus the spread of the component posterior means.
inline double gmm_oracle_posterior_trace_cov(const GaussianMixture& gmm, double t, double sigma,
                                             const Eigen::VectorXd& y) {
  const auto post = detail::posterior_mixture(gmm, t, sigma, y);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(y.size());
  for (Eigen::Index i = 0; i < post.weights.size(); ++i) u += post.weights[i] * post.means[i];
  double spread = 0.0;
  for (Eigen::Index i = 0; i < post.weights.size(); ++i)
    spread += post.weights[i] * (post.means[i] - u).squaredNorm();
  return gmm.dim() * post.var + spread;
}

/// Wraps a mixture as a TargetModel with every optional member populated.
inline TargetModel make_target(const GaussianMixture& gmm) {
  gmm.validate();
  TargetModel target;
  target.dim = gmm.dim();
  target.log_density_unnorm = [gmm](const Eigen::VectorXd& x) { return gmm_log_density(gmm, x); };
  target.grad_log_density = [gmm](const Eigen::VectorXd& x) {
    return gmm_grad_log_density(gmm, x);
  };
  target.variance_proxy = gmm_variance_proxy(gmm);
  target.mean = gmm_mean(gmm);
  target.oracle_denoiser = [gmm](double t, double sigma, const Eigen::VectorXd& y) {
    return gmm_oracle_denoiser(gmm, t, sigma, y);
  };
  target.oracle_posterior_trace_cov = [gmm](double t, double sigma, const Eigen::VectorXd& y) {
    return gmm_oracle_posterior_trace_cov(gmm, t, sigma, y);
  };
  target.sample = [gmm](Rng& rng) { return gmm_sample(gmm, rng); };
  return target;
}

/// Two equally weighted components at +c*ones and -c*ones; the workhorse
/// benchmark family.
inline GaussianMixture symmetric_pair_mixture(int dim, double c, double variance) {
  if (dim < 1) throw std::domain_error("symmetric_pair_mixture: dim must be positive");
  GaussianMixture gmm;
  gmm.weights = Eigen::VectorXd::Constant(2, 0.5);
  gmm.means = {Eigen::VectorXd::Constant(dim, c), Eigen::VectorXd::Constant(dim, -c)};
  gmm.component_variance = variance;
  return gmm;
}

}  // namespace slips
