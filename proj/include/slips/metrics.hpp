#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "slips/rng.hpp"
#include "slips/targets.hpp"

namespace slips {

/// One computed metric: values plus the estimator's standard error and the
/// parameters needed to reproduce it.
struct MetricRecord {
  std::string metric;
  std::vector<double> values;
  double std_error = 0.0;
  long n_samples = 0;
  std::map<std::string, std::string> params;
};

inline std::vector<Eigen::VectorXd> random_unit_directions(int n, int dim, Rng& rng) {
  if (n < 1 || dim < 1) throw std::domain_error("random_unit_directions: bad arguments");
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd v = rng.normal_vector(dim);
    double norm = v.norm();
    while (!(norm > 0.0)) {
      v = rng.normal_vector(dim);
      norm = v.norm();
    }
    dirs.push_back(v / norm);
  }
  return dirs;
}

namespace detail {

// Freedman-Diaconis bin count over the pooled projected values. The
// n^(-1/3) factor uses the smaller sample: the resolution a two-sample
// comparison supports is set by the smaller side, and binning finer only
// inflates the distance between equal distributions.
inline int fd_bin_count(std::vector<double> pooled, double lo, double hi, long n_small) {
  std::sort(pooled.begin(), pooled.end());
  const std::size_t n = pooled.size();
  const double q1 = pooled[static_cast<std::size_t>(0.25 * (n - 1))];
  const double q3 = pooled[static_cast<std::size_t>(0.75 * (n - 1))];
  const double iqr = q3 - q1;
  const double width = 2.0 * iqr / std::cbrt(static_cast<double>(n_small));
  if (!(width > 0.0)) return 16;
  const double count = (hi - lo) / width;
  if (count >= 512.0) return 512;  // clamp in double; the cast below is then safe
  return std::max(static_cast<int>(std::ceil(count)), 16);
}

inline double histogram_tv(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int n_bins) {
  const double lo = std::min(a.minCoeff(), b.minCoeff());
  const double hi = std::max(a.maxCoeff(), b.maxCoeff());
  if (!(hi > lo)) return 0.0;  // all projected values identical
  std::vector<double> mass_a(n_bins, 0.0), mass_b(n_bins, 0.0);
  const double inv_width = n_bins / (hi - lo);
  auto add = [&](const Eigen::VectorXd& v, std::vector<double>& mass) {
    const double w = 1.0 / static_cast<double>(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      int bin = static_cast<int>((v[i] - lo) * inv_width);
      bin = std::clamp(bin, 0, n_bins - 1);
      mass[bin] += w;
    }
  };
  add(a, mass_a);
  add(b, mass_b);
  double tv = 0.0;
  for (int i = 0; i < n_bins; ++i) tv += std::abs(mass_a[i] - mass_b[i]);
  return 0.5 * tv;
}

}  // namespace detail

/// Sliced total variation with caller-supplied projection directions:
/// histogram TV of the two projected samples, averaged over directions.
/// n_bins <= 0 selects Freedman-Diaconis binning per direction.
inline MetricRecord sliced_tv_with_directions(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                              const std::vector<Eigen::VectorXd>& directions,
                                              int n_bins = 0) {
  if (a.rows() < 1 || b.rows() < 1) throw std::domain_error("sliced_tv: empty sample set");
  if (a.cols() != b.cols()) throw std::domain_error("sliced_tv: dimension mismatch");
  if (directions.empty()) throw std::domain_error("sliced_tv: no projection directions");
  const long n_small = std::min(a.rows(), b.rows());
  std::vector<double> per_dir;
  per_dir.reserve(directions.size());
  for (const auto& u : directions) {
    if (u.size() != a.cols()) throw std::domain_error("sliced_tv: direction dimension mismatch");
    const Eigen::VectorXd pa = a * u;
    const Eigen::VectorXd pb = b * u;
    int bins = n_bins;
    if (bins <= 0) {
      const double lo = std::min(pa.minCoeff(), pb.minCoeff());
      const double hi = std::max(pa.maxCoeff(), pb.maxCoeff());
      if (!(hi > lo)) {
        per_dir.push_back(0.0);
        continue;
      }
      std::vector<double> pooled(pa.data(), pa.data() + pa.size());
      pooled.insert(pooled.end(), pb.data(), pb.data() + pb.size());
      bins = detail::fd_bin_count(std::move(pooled), lo, hi, n_small);
    }
    per_dir.push_back(detail::histogram_tv(pa, pb, bins));
  }
  double mean = 0.0;
  for (double v : per_dir) mean += v;
  mean /= per_dir.size();
  double var = 0.0;
  for (double v : per_dir) var += (v - mean) * (v - mean);
  const std::size_t p = per_dir.size();
  MetricRecord rec;
  rec.metric = "sliced_tv";
  rec.values = std::move(per_dir);
  rec.std_error = p > 1 ? std::sqrt(var / (p - 1) / p) : 0.0;
  rec.n_samples = n_small;
  rec.params["n_projections"] = std::to_string(p);
  rec.params["n_bins"] = n_bins > 0 ? std::to_string(n_bins) : "fd";
  // Summary first, per-direction values after it.
  rec.values.insert(rec.values.begin(), mean);
  return rec;
}

/// Sliced total variation over n_projections random unit directions.
/// values[0] is the mean over directions; the per-direction values follow.
inline MetricRecord sliced_tv(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                              int n_projections, int n_bins, Rng& rng) {
  if (a.cols() < 1) throw std::domain_error("sliced_tv: empty samples");
  const auto dirs = random_unit_directions(n_projections, static_cast<int>(a.cols()), rng);
  return sliced_tv_with_directions(a, b, dirs, n_bins);
}

/// Empirical mode weights by nearest-mean assignment, with multinomial
/// standard errors (max over modes in std_error, per-mode in params).
inline MetricRecord mode_weights(const Eigen::MatrixXd& samples,
                                 const std::vector<Eigen::VectorXd>& mode_means) {
  if (samples.rows() < 1) throw std::domain_error("mode_weights: empty samples");
  if (mode_means.size() < 2) throw std::domain_error("mode_weights: need at least two modes");
  for (const auto& m : mode_means)
    if (m.size() != samples.cols()) throw std::domain_error("mode_weights: dimension mismatch");
  const long n = samples.rows();
  std::vector<long> counts(mode_means.size(), 0);
  for (long i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t pick = 0;
    for (std::size_t j = 0; j < mode_means.size(); ++j) {
      const double dist = (samples.row(i).transpose() - mode_means[j]).squaredNorm();
      if (dist < best) {
        best = dist;
        pick = j;
      }
    }
    ++counts[pick];
  }
  MetricRecord rec;
  rec.metric = "mode_weights";
  rec.n_samples = n;
  double max_se = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double w = static_cast<double>(counts[j]) / n;
    const double se = std::sqrt(w * (1.0 - w) / n);
    rec.values.push_back(w);
    rec.params["se_" + std::to_string(j)] = std::to_string(se);
    max_se = std::max(max_se, se);
  }
  rec.std_error = max_se;
  rec.params["n_modes"] = std::to_string(mode_means.size());
  return rec;
}

/// Relative moment errors against the target's exact mean and spread:
/// values = { ||mean_hat - mean|| / sqrt(R2), |R2_hat - R2| / R2 } where
/// R2 = E||X - E[X]||^2 and R2_hat uses the exact mean.
inline MetricRecord moment_error(const Eigen::MatrixXd& samples, const TargetModel& target) {
  if (samples.rows() < 2) throw std::domain_error("moment_error: need at least two samples");
  if (!target.mean || !target.variance_proxy)
    throw std::domain_error("moment_error: target must expose exact mean and variance proxy");
  if (samples.cols() != target.dim) throw std::domain_error("moment_error: dimension mismatch");
  const long n = samples.rows();
  const Eigen::VectorXd mean_hat = samples.colwise().mean();
  const double r2 = *target.variance_proxy;
  double r2_hat = 0.0, r2_sq = 0.0;
  for (long i = 0; i < n; ++i) {
    const double v = (samples.row(i).transpose() - *target.mean).squaredNorm();
    r2_hat += v;
    r2_sq += v * v;
  }
  r2_hat /= n;
  const double var_r2 = std::max(0.0, r2_sq / n - r2_hat * r2_hat);
  MetricRecord rec;
  rec.metric = "moment_error";
  rec.n_samples = n;
  rec.values = {(mean_hat - *target.mean).norm() / std::sqrt(r2), std::abs(r2_hat - r2) / r2};
  rec.std_error = std::sqrt(var_r2 / n) / r2;  // second-moment error scale
  return rec;
}

}  // namespace slips
