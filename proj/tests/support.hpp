#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "bohmchsh/wavefunction.hpp"

namespace support {

using namespace bohmchsh;

inline Grid1D default_grid() { return Grid1D::spanning(256, -20.0, 20.0); }

inline WaveFunction2D product_state(const Grid1D& gx, const Grid1D& gy, GaussianSpec a, GaussianSpec b) {
  SuperpositionTerm term{{1.0, 0.0}, a, b};
  return build_superposition(gx, gy, std::span<const SuperpositionTerm>(&term, 1));
}

/// (g+ (x) g-) + (g- (x) g+), packets at +-sep.
inline WaveFunction2D quadrant_state(const Grid1D& gx, const Grid1D& gy, double sep = 5.0, double width = 1.0) {
  std::vector<SuperpositionTerm> terms{
      {{1.0, 0.0}, {sep, width, 0.0}, {-sep, width, 0.0}},
      {{1.0, 0.0}, {-sep, width, 0.0}, {sep, width, 0.0}},
  };
  return build_superposition(gx, gy, terms);
}

/// Normalized state with i.i.d. complex Gaussian amplitudes.
inline WaveFunction2D random_state(const Grid1D& gx, const Grid1D& gy, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  WaveFunction2D psi(gx, gy);
  for (auto& z : psi.amplitudes()) z = {normal(rng), normal(rng)};
  return normalize(psi);
}

/// Random smooth, localized state: a few random Gaussian product terms.
inline WaveFunction2D random_packet_state(const Grid1D& gx, const Grid1D& gy, unsigned seed, int terms = 4) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> centre(-4.0, 4.0), width(0.7, 1.5), momentum(-1.0, 1.0), coef(-1.0, 1.0);
  std::vector<SuperpositionTerm> list;
  for (int i = 0; i < terms; ++i) {
    list.push_back({{coef(rng), coef(rng)},
                    {centre(rng), width(rng), momentum(rng)},
                    {centre(rng), width(rng), momentum(rng)}});
  }
  return build_superposition(gx, gy, list);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Mean and variance of |psi|^2 along one axis, from grid sums.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments axis_moments(const WaveFunction2D& psi, Axis axis) {
  const auto& g = psi.grid(axis);
  std::vector<double> m(g.n, 0.0);
  for (std::size_t i = 0; i < psi.nx(); ++i)
    for (std::size_t j = 0; j < psi.ny(); ++j) m[axis == Axis::a ? i : j] += std::norm(psi(i, j));
  double total = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < g.n; ++k) {
    total += m[k];
    s1 += m[k] * g.point(k);
    s2 += m[k] * g.point(k) * g.point(k);
  }
  Moments out;
  out.mean = s1 / total;
  out.variance = s2 / total - out.mean * out.mean;
  return out;
}

}  // namespace support
