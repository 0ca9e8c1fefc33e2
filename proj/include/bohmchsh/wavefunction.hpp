#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "bohmchsh/grid.hpp"

namespace bohmchsh {

using complex = std::complex<double>;

/// Configuration-space point (Q_A, Q_B).
struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Gaussian packet exp(-(u-c)^2/(4 w^2)) exp(i p u / hbar); `width` is the
/// standard deviation of |g|^2.
struct GaussianSpec {
  double center = 0.0;
  double width = 1.0;
  double momentum = 0.0;
};

/// Two-particle amplitudes on grid_x (particle A) x grid_y (particle B),
/// stored row-major: index ix * ny + iy.
class WaveFunction2D {
 public:
  WaveFunction2D() = default;
  WaveFunction2D(Grid1D grid_x, Grid1D grid_y);
  WaveFunction2D(Grid1D grid_x, Grid1D grid_y, std::vector<complex> amplitudes);

  const Grid1D& grid_x() const { return grid_x_; }
  const Grid1D& grid_y() const { return grid_y_; }
  const Grid1D& grid(Axis axis) const { return axis == Axis::a ? grid_x_ : grid_y_; }
  std::size_t nx() const { return grid_x_.n; }
  std::size_t ny() const { return grid_y_.n; }
  std::size_t size() const { return amplitudes_.size(); }
  double cell_area() const { return grid_x_.dx * grid_y_.dx; }

  complex operator()(std::size_t ix, std::size_t iy) const { return amplitudes_[ix * ny() + iy]; }
  complex& operator()(std::size_t ix, std::size_t iy) { return amplitudes_[ix * ny() + iy]; }

  std::span<const complex> amplitudes() const { return amplitudes_; }
  std::span<complex> amplitudes() { return amplitudes_; }

  bool contains(Point p) const;

  WaveFunction2D& operator*=(complex factor);
  WaveFunction2D& operator+=(const WaveFunction2D& other);

 private:
  Grid1D grid_x_;
  Grid1D grid_y_;
  std::vector<complex> amplitudes_;
};

WaveFunction2D operator*(complex factor, WaveFunction2D psi);
WaveFunction2D operator+(WaveFunction2D lhs, const WaveFunction2D& rhs);
WaveFunction2D operator-(WaveFunction2D lhs, const WaveFunction2D& rhs);

/// <lhs|rhs> with the dx*dy cell weight.
complex inner_product(const WaveFunction2D& lhs, const WaveFunction2D& rhs);

/// Largest pointwise |lhs - rhs|.
double max_abs_difference(const WaveFunction2D& lhs, const WaveFunction2D& rhs);

struct SuperpositionTerm {
  complex coefficient{1.0, 0.0};
  GaussianSpec packet_a;
  GaussianSpec packet_b;
};

/// Sampled packet on a 1D grid (not normalized).
std::vector<complex> gaussian_packet(const Grid1D& grid, const GaussianSpec& spec, double hbar = 1.0);

/// Normalized sum of product Gaussians; throws ZeroNormError on cancellation.
WaveFunction2D build_superposition(const Grid1D& grid_x, const Grid1D& grid_y,
                                   std::span<const SuperpositionTerm> terms, double hbar = 1.0);

double norm_squared(const WaveFunction2D& psi);
WaveFunction2D normalize(WaveFunction2D psi);

/// Probability weight in the two outermost cells of each edge perpendicular to `axis`.
double boundary_mass(const WaveFunction2D& psi, Axis axis);

/// Hard limit on boundary_mass for any propagated state.
inline constexpr double kBoundaryMassLimit = 1e-6;

/// Throws BoundaryMassError if either axis exceeds kBoundaryMassLimit.
void check_boundary_mass(const WaveFunction2D& psi);

/// Cell probabilities |psi|^2 dx dy, row-major like the amplitudes.
std::vector<double> cell_probabilities(const WaveFunction2D& psi);

/// Marginal cell probabilities along one axis.
std::vector<double> marginal(const WaveFunction2D& psi, Axis axis);

/// i.i.d. draws from |psi|^2: inverse CDF on the x-marginal, then on the
/// conditional y row, then uniform jitter inside the chosen cell.
std::vector<Point> sample_positions(const WaveFunction2D& psi, std::size_t count, std::uint64_t seed);

}  // namespace bohmchsh
