#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace slips {

enum class GridKind { log_snr, uniform, custom };

/// Strictly increasing observation times t_0 < t_1 < ... < t_K, all positive.
struct Discretization {
  std::vector<double> grid;
  GridKind kind = GridKind::custom;

  int intervals() const { return static_cast<int>(grid.size()) - 1; }
  double t0() const { return grid.front(); }
  double horizon() const { return grid.back(); }

  void validate() const {
    if (grid.size() < 2) throw std::domain_error("Discretization: need at least two times");
    if (!(grid.front() > 0.0)) throw std::domain_error("Discretization: times must be positive");
    for (std::size_t k = 1; k < grid.size(); ++k)
      if (!(grid[k] > grid[k - 1]))
        throw std::domain_error("Discretization: times must be strictly increasing");
    if (kind == GridKind::log_snr) {
      // The signal-to-noise ratio at time t is t itself, so equal log-SNR
      // spacing means a constant ratio between consecutive times.
      const double r0 = grid[1] / grid[0];
      for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
        const double r = grid[k + 1] / grid[k];
        if (std::abs(r - r0) > 1e-10 * r0)
          throw std::domain_error("Discretization: log_snr grid has non-constant ratio");
      }
    }
  }
};

inline void require_grid_args(double t0, double T, int K) {
  if (!(t0 > 0.0)) throw std::domain_error("grid: t0 must be positive");
  if (!(T > t0)) throw std::domain_error("grid: T must exceed t0");
  if (K < 1) throw std::domain_error("grid: K must be at least 1");
}

/// Geometric time grid t_k = t0 (T/t0)^(k/K); consecutive ratios are equal,
/// i.e. the grid is uniform in log SNR.
inline Discretization log_snr_grid(double t0, double T, int K) {
  require_grid_args(t0, T, K);
  Discretization disc;
  disc.kind = GridKind::log_snr;
  disc.grid.resize(K + 1);
  const double ratio = T / t0;
  for (int k = 0; k <= K; ++k)
    disc.grid[k] = t0 * std::pow(ratio, static_cast<double>(k) / static_cast<double>(K));
  disc.grid[0] = t0;
  disc.grid[K] = T;
  return disc;
}

inline Discretization uniform_grid(double t0, double T, int K) {
  require_grid_args(t0, T, K);
  Discretization disc;
  disc.kind = GridKind::uniform;
  disc.grid.resize(K + 1);
  const double h = (T - t0) / K;
  for (int k = 0; k <= K; ++k) disc.grid[k] = t0 + k * h;
  disc.grid[0] = t0;
  disc.grid[K] = T;
  return disc;
}

/// Discretization constant of a time grid:
///   sum_{k=1}^{K-1} max(0, (t_{k+1} - t_k) - (t_k - t_{k-1})) / t_k
///     + (t_1 - t_0) / t_0.
/// Evaluated by this literal summation for any grid; the geometric grid
/// admits the closed form (K-1) kappa^2 / (1+kappa) + kappa with
/// kappa = (T/t0)^(1/K) - 1, which the tests verify against this function.
inline double discretization_constant(const Discretization& disc) {
  disc.validate();
  const auto& t = disc.grid;
  const int K = disc.intervals();
  double c = (t[1] - t[0]) / t[0];
  for (int k = 1; k < K; ++k) {
    const double growth = (t[k + 1] - t[k]) - (t[k] - t[k - 1]);
    if (growth > 0.0) c += growth / t[k];
  }
  return c;
}

}  // namespace slips
