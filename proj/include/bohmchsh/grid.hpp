#pragma once

#include <cstddef>
#include <vector>

namespace bohmchsh {

/// Particle axis of the configuration space: A is Alice's (x), B is Bob's (y).
enum class Axis { a, b };

inline const char* axis_name(Axis axis) { return axis == Axis::a ? "A" : "B"; }

/// Uniform periodic 1D grid; point j sits at x_min + j*dx and owns the cell
/// [x_j - dx/2, x_j + dx/2).
struct Grid1D {
  std::size_t n = 256;
  double x_min = -20.0 + 40.0 / 512.0;
  double dx = 40.0 / 256.0;

  /// Cell-centred grid whose cells tile [lo, hi) exactly.
  static Grid1D spanning(std::size_t n, double lo, double hi);

  double point(std::size_t j) const { return x_min + static_cast<double>(j) * dx; }
  double lower_edge() const { return x_min - 0.5 * dx; }
  double upper_edge() const { return lower_edge() + static_cast<double>(n) * dx; }
  double length() const { return static_cast<double>(n) * dx; }

  /// Angular wavenumbers in FFT order, k_j = 2*pi*j/(n*dx), j wrapped to [-n/2, n/2).
  std::vector<double> wavenumbers() const;

  /// Throws InvalidArgument unless n >= 8 is a power of two and dx > 0.
  void validate() const;
};

bool operator==(const Grid1D& lhs, const Grid1D& rhs);

struct PhysicalParams {
  double hbar = 1.0;
  double mass_a = 1.0;
  double mass_b = 1.0;

  double mass(Axis axis) const { return axis == Axis::a ? mass_a : mass_b; }
  void validate() const;
};

}  // namespace bohmchsh
