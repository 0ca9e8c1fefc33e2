#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "bohmchsh/bohm.hpp"

namespace bohmchsh {

/// Kolmogorov-Smirnov distance between samples and the distribution whose
/// mass per grid cell is `cell_mass` (uniform within each cell).
double ks_distance(std::span<const double> samples, const Grid1D& grid, std::span<const double> cell_mass);

/// Total-variation distance between the sample histogram and |psi|^2, both
/// binned on bins_per_axis x bins_per_axis macro-cells.
double binned_tv_distance(std::span<const Point> samples, const WaveFunction2D& psi, std::size_t bins_per_axis = 16);

/// Time at which a free Gaussian of |psi|^2 width sigma0 doubles its width.
double width_doubling_time(double sigma0, double mass, double hbar = 1.0);

/// Analytic width of a free Gaussian: sigma0 sqrt(1 + (hbar t / (2 m sigma0^2))^2).
double free_gaussian_width(double sigma0, double t, double mass, double hbar = 1.0);

struct EquivarianceReport {
  double time = 0.0;
  std::size_t samples = 0;
  double ks_a = 0.0;
  double ks_b = 0.0;
  double tv = 0.0;
  IntegratorStats diagnostics;
  /// Surviving end points and the exact evolved state, for histograms.
  std::vector<Point> final_points;
  WaveFunction2D evolved;
};

/// Samples |psi0|^2, integrates to `time`, compares with |psi(time)|^2.
EquivarianceReport check_equivariance(const WaveFunction2D& psi0, const PhysicalParams& params, double time,
                                      std::size_t n, std::uint64_t seed, const IntegratorConfig& config);

/// Per-cell marginal densities: columns x, empirical, exact.
void write_marginal_histogram_csv(std::ostream& out, const EquivarianceReport& report, Axis axis);

}  // namespace bohmchsh
