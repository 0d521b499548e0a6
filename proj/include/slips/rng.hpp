#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace slips {

namespace detail {

// SplitMix64 finalizer; decorrelates seeds of derived streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Seeded generator handed explicitly to every randomized operation.
/// Streams derived with derive(seed, index) depend only on (seed, index),
/// so batch runs reproduce bit-identically for any worker count or
/// scheduling order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(detail::mix64(seed)) {}

  static Rng derive(std::uint64_t seed, std::uint64_t index) {
    return Rng(detail::mix64(seed) ^ detail::mix64(index * 0xd1b54a32d192ed03ULL + 1));
  }

  /// Uniform draw in [0, 1).
  double uniform() { return uniform_(engine_); }

  /// Standard normal draw.
  double normal() { return normal_(engine_); }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal_(engine_);
    return v;
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace slips
