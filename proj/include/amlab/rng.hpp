// Seeded random sampling utilities.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "amlab/linalg.hpp"

namespace amlab {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent per-trial seeds.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec gaussian_vec(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

/// Uniform sample from the closed Euclidean ball of the given radius.
inline Vec uniform_ball(Rng& rng, Eigen::Index n, double radius) {
  Vec v = gaussian_vec(rng, n);
  double nv = v.norm();
  while (nv == 0.0) {
    v = gaussian_vec(rng, n);
    nv = v.norm();
  }
  const double r = radius * std::pow(uniform(rng), 1.0 / static_cast<double>(n));
  return v * (r / nv);
}

/// Symmetric Dirichlet(alpha) sample; small alpha concentrates near vertices.
inline Vec dirichlet(Rng& rng, Eigen::Index n, double alpha) {
  std::gamma_distribution<double> g(alpha, 1.0);
  Vec v(n);
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    v[i] = g(rng);
    s += v[i];
  }
  if (s <= 0.0) {
    v.setZero();
    v[std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng)] = 1.0;
    return v;
  }
  return v / s;
}

}  // namespace amlab
