#pragma once

#include <span>
#include <vector>

#include "bohmchsh/wavefunction.hpp"

namespace bohmchsh {

/// Whether a propagation verifies the boundary-mass limit on its output.
/// `skip` treats the grid as a genuine torus, which the spectral operator
/// analysis relies on for arbitrary (non-localized) vectors.
enum class BoundaryCheck { enforce, skip };

/// Free-propagator phases exp(-i hbar k^2 t / (2 m)) in FFT order.
std::vector<complex> free_phases(const Grid1D& grid, double t, double hbar, double mass);

/// Exact free evolution, axis A by t_a and axis B by t_b (negative = backwards).
/// Throws BoundaryMassError when the output touches the periodic edge.
WaveFunction2D free_evolve(const WaveFunction2D& psi, double t_a, double t_b, const PhysicalParams& params,
                           BoundaryCheck check = BoundaryCheck::enforce);

WaveFunction2D free_evolve_inverse(const WaveFunction2D& psi, double t_a, double t_b,
                                   const PhysicalParams& params, BoundaryCheck check = BoundaryCheck::enforce);

/// Single-axis free evolution of a 1D amplitude vector (no boundary check).
std::vector<complex> free_evolve_1d(std::span<const complex> amplitudes, const Grid1D& grid, double t,
                                    double hbar, double mass);

}  // namespace bohmchsh
