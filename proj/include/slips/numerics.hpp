#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace slips {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

/// log(sum_i exp(v[i])) without overflow. All-(-inf) input returns -inf.
inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

inline double log_normal_pdf(double x, double mean, double var) {
  const double r = x - mean;
  return -0.5 * (kLogTwoPi + std::log(var) + r * r / var);
}

/// Log density of the isotropic Gaussian N(mean, var * I).
inline double log_normal_pdf_iso(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                                 double var) {
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * (kLogTwoPi + std::log(var)) + (x - mean).squaredNorm() / var);
}

/// Composite trapezoid rule with n intervals (n + 1 nodes) on [a, b].
inline double integrate_trapezoid(const std::function<double(double)>& f, double a, double b,
                                  int n) {
  if (!(b > a) || n < 1) throw std::domain_error("integrate_trapezoid: bad interval");
  const double h = (b - a) / n;
  double acc = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) acc += f(a + i * h);
  return acc * h;
}

/// Trapezoid rule refined by interval doubling until the estimate changes by
/// less than rel_tol or max_intervals is reached (default 2^16).
inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double rel_tol = 1e-12, int max_intervals = 1 << 16) {
  if (!(b > a)) throw std::domain_error("integrate_adaptive: bad interval");
  int n = 64;
  double h = (b - a) / n;
  double acc = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) acc += f(a + i * h);
  double value = acc * h;
  while (n < max_intervals) {
    // Refine: new nodes are the midpoints of the current intervals.
    double mid = 0.0;
    for (int i = 0; i < n; ++i) mid += f(a + (i + 0.5) * h);
    acc += mid;
    n *= 2;
    h *= 0.5;
    const double next = acc * h;
    const bool converged = std::abs(next - value) <= rel_tol * std::max(1.0, std::abs(next));
    value = next;
    if (converged) break;
  }
  return value;
}

struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;  // for the weight function exp(-x^2)
};

/// Gauss-Hermite rule from the symmetric tridiagonal Jacobi matrix
/// (Golub-Welsch). Exact for polynomials of degree 2n - 1 against exp(-x^2).
inline GaussHermiteRule gauss_hermite_rule(int n) {
  if (n < 1) throw std::domain_error("gauss_hermite_rule: n must be positive");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(k / 2.0);
    jacobi(k, k - 1) = b;
    jacobi(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights.resize(n);
  const double sqrt_pi = std::sqrt(M_PI);
  for (int k = 0; k < n; ++k) {
    const double v0 = es.eigenvectors()(0, k);
    rule.weights[k] = sqrt_pi * v0 * v0;
  }
  return rule;
}

/// Half the L1 distance between two densities on [a, b], by trapezoid rule
/// with n intervals. Inputs are renormalized on [a, b] first, so unnormalized
/// densities are accepted; the interval must carry their full mass.
inline double tv_distance_1d(const std::function<double(double)>& f,
                             const std::function<double(double)>& g, double a, double b,
                             int n = 1 << 16) {
  if (!(b > a) || n < 2) throw std::domain_error("tv_distance_1d: bad interval");
  const double h = (b - a) / n;
  std::vector<double> fv(n + 1), gv(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double x = a + i * h;
    fv[i] = f(x);
    gv[i] = g(x);
  }
  auto trapz = [&](const std::vector<double>& v) {
    double acc = 0.5 * (v.front() + v.back());
    for (int i = 1; i < n; ++i) acc += v[i];
    return acc * h;
  };
  const double zf = trapz(fv);
  const double zg = trapz(gv);
  if (!(zf > 0.0) || !(zg > 0.0)) throw std::domain_error("tv_distance_1d: vanishing mass");
  double acc = 0.5 * (std::abs(fv.front() / zf - gv.front() / zg) +
                      std::abs(fv.back() / zf - gv.back() / zg));
  for (int i = 1; i < n; ++i) acc += std::abs(fv[i] / zf - gv[i] / zg);
  return 0.5 * acc * h;
}

}  // namespace slips
