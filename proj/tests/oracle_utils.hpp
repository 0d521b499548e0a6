// Independent numerical oracles for the test suite. Everything here is
// implemented from first principles (composite Simpson quadrature, central
// finite differences, batch means) rather than calling into the library, so
// library results can be checked against genuinely separate arithmetic.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

// Composite Simpson rule with n subintervals (n made even internally).
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n < 2) throw std::domain_error("simpson: need at least 2 intervals");
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// Central finite difference of a scalar function.
inline double fd_derivative(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& values) {
  if (values.size() < 2) throw std::domain_error("mean_se: need at least two values");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(values.size() - 1);
  return {mean, std::sqrt(var / static_cast<double>(values.size()))};
}

// Standard error of a correlated sequence by non-overlapping batch means.
inline MeanSe batch_mean_se(const std::vector<double>& values, int n_batches = 32) {
  if (static_cast<int>(values.size()) < 2 * n_batches)
    throw std::domain_error("batch_mean_se: sequence too short");
  const std::size_t per = values.size() / n_batches;
  std::vector<double> batches;
  batches.reserve(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < per; ++i) acc += values[b * per + i];
    batches.push_back(acc / static_cast<double>(per));
  }
  return mean_se(batches);
}

// Posterior moments in one dimension by quadrature: the posterior of X given
// the time-t observation y is proportional to prior_density(x) * the Gaussian
// observation likelihood exp(-(y - t x)^2 / (2 t sigma^2)).
struct Posterior1d {
  double mean = 0.0;
  double variance = 0.0;
};

inline Posterior1d posterior_moments_1d(const std::function<double(double)>& prior_density,
                                        double t, double sigma, double y, double lo, double hi,
                                        int n = 1 << 13) {
  auto weight = [&](double x) {
    const double r = y - t * x;
    return prior_density(x) * std::exp(-r * r / (2.0 * t * sigma * sigma));
  };
  const double z = simpson(weight, lo, hi, n);
  if (!(z > 0.0)) throw std::runtime_error("posterior_moments_1d: vanishing mass");
  const double m = simpson([&](double x) { return x * weight(x); }, lo, hi, n) / z;
  const double m2 = simpson([&](double x) { return x * x * weight(x); }, lo, hi, n) / z;
  return {m, m2 - m * m};
}

}  // namespace oracle
