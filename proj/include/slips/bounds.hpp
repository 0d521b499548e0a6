#pragma once

#include <cmath>
#include <stdexcept>

namespace slips {

/// Total-variation error left by stopping the observation process at time t:
/// 0.5 * score_norm * sqrt(d sigma^2 / t), where score_norm is the L2(pi)
/// norm of the target score (not squared).
inline double tv_information_bound(double score_norm, int dim, double sigma, double t) {
  if (!(score_norm >= 0.0)) throw std::domain_error("tv_information_bound: negative score norm");
  if (dim < 1 || !(sigma > 0.0) || !(t > 0.0))
    throw std::domain_error("tv_information_bound: bad parameters");
  return 0.5 * score_norm * std::sqrt(dim * sigma * sigma / t);
}

/// Additive decomposition of the sampling error bound. Each term is reported
/// separately so experiments can attribute error to its source.
struct TvBoundReport {
  double init_term = 0.0;         // user-supplied initialization error
  double disc_term = 0.0;         // sqrt(d * c_disc)
  double estimation_term = 0.0;   // sqrt(T * eps0^2 / sigma^2)
  double information_term = 0.0;  // 0.5 * score_norm * sqrt(d sigma^2 / T)
  double total = 0.0;
};

inline TvBoundReport tv_total_bound(int dim, double sigma, double T, double eps0, double c_disc,
                                    double score_norm, double init_tv) {
  if (dim < 1 || !(sigma > 0.0) || !(T > 0.0))
    throw std::domain_error("tv_total_bound: bad parameters");
  if (!(eps0 >= 0.0) || !(c_disc >= 0.0) || !(score_norm >= 0.0) || !(init_tv >= 0.0))
    throw std::domain_error("tv_total_bound: negative term");
  TvBoundReport report;
  report.init_term = init_tv;
  report.disc_term = std::sqrt(dim * c_disc);
  report.estimation_term = std::sqrt(T * eps0 * eps0 / (sigma * sigma));
  report.information_term = tv_information_bound(score_norm, dim, sigma, T);
  report.total =
      report.init_term + report.disc_term + report.estimation_term + report.information_term;
  return report;
}

}  // namespace slips
