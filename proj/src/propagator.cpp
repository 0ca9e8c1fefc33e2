#include "bohmchsh/propagator.hpp"

#include "bohmchsh/errors.hpp"
#include "fft.hpp"

namespace bohmchsh {

using detail::fft_axis;
using detail::FftDirection;

std::vector<complex> free_phases(const Grid1D& grid, double t, double hbar, double mass) {
  const auto k = grid.wavenumbers();
  std::vector<complex> phases(k.size());
  const double scale = -hbar * t / (2.0 * mass);
  for (std::size_t j = 0; j < k.size(); ++j) phases[j] = std::polar(1.0, scale * k[j] * k[j]);
  return phases;
}

namespace {

void evolve_axis(WaveFunction2D& psi, Axis axis, double t, const PhysicalParams& params) {
  if (t == 0.0) return;
  const std::size_t nx = psi.nx();
  const std::size_t ny = psi.ny();
  const Grid1D& grid = psi.grid(axis);
  auto phases = free_phases(grid, t, params.hbar, params.mass(axis));
  const double inv_n = 1.0 / static_cast<double>(grid.n);
  for (auto& p : phases) p *= inv_n;

  auto data = psi.amplitudes();
  fft_axis(data, nx, ny, axis, FftDirection::forward);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) data[ix * ny + iy] *= phases[axis == Axis::a ? ix : iy];
  }
  fft_axis(data, nx, ny, axis, FftDirection::backward);
}

}  // namespace

WaveFunction2D free_evolve(const WaveFunction2D& psi, double t_a, double t_b, const PhysicalParams& params,
                           BoundaryCheck check) {
  WaveFunction2D out = psi;
  evolve_axis(out, Axis::a, t_a, params);
  evolve_axis(out, Axis::b, t_b, params);
  if (check == BoundaryCheck::enforce) check_boundary_mass(out);
  return out;
}

WaveFunction2D free_evolve_inverse(const WaveFunction2D& psi, double t_a, double t_b,
                                   const PhysicalParams& params, BoundaryCheck check) {
  return free_evolve(psi, -t_a, -t_b, params, check);
}

std::vector<complex> free_evolve_1d(std::span<const complex> amplitudes, const Grid1D& grid, double t,
                                    double hbar, double mass) {
  std::vector<complex> out(amplitudes.begin(), amplitudes.end());
  if (t == 0.0) return out;
  const auto phases = free_phases(grid, t, hbar, mass);
  const double inv_n = 1.0 / static_cast<double>(grid.n);
  detail::fft_1d(out, FftDirection::forward);
  for (std::size_t j = 0; j < out.size(); ++j) out[j] *= phases[j] * inv_n;
  detail::fft_1d(out, FftDirection::backward);
  return out;
}

}  // namespace bohmchsh
