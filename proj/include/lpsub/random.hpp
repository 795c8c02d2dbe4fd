#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace lpsub {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; a stable, platform-independent 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the independent stream number `index` derived from `seed`.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

/// Seed for trial `trial` of grid cell `cell`.
constexpr std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t cell,
                                   std::uint64_t trial) noexcept {
  return seed ^ mix64(mix64(cell) ^ (trial * 0xd6e8feb86659fd93ULL));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline Eigen::VectorXd gaussian_vector(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

inline Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

/// Uniform direction on the unit sphere of R^n.
inline Eigen::VectorXd random_unit_vector(Rng& rng, Eigen::Index n) {
  for (;;) {
    Eigen::VectorXd v = gaussian_vector(rng, n);
    const double norm = v.norm();
    if (norm > 1e-300) return v / norm;
  }
}

/// Uniform point in the n-ball of the given radius (radial density ~ r^(n-1)).
inline Eigen::VectorXd random_in_ball(Rng& rng, Eigen::Index n, double radius) {
  const double r = radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(n));
  return r * random_unit_vector(rng, n);
}

}  // namespace lpsub
