#include "bohmchsh/wavefunction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "bohmchsh/errors.hpp"

namespace bohmchsh {

Grid1D Grid1D::spanning(std::size_t n, double lo, double hi) {
  Grid1D grid;
  grid.n = n;
  grid.dx = (hi - lo) / static_cast<double>(n);
  grid.x_min = lo + 0.5 * grid.dx;
  grid.validate();
  return grid;
}

std::vector<double> Grid1D::wavenumbers() const {
  std::vector<double> k(n);
  const double scale = 2.0 * std::numbers::pi / (static_cast<double>(n) * dx);
  const auto half = static_cast<std::ptrdiff_t>(n / 2);
  for (std::size_t j = 0; j < n; ++j) {
    auto index = static_cast<std::ptrdiff_t>(j);
    if (index >= half) index -= static_cast<std::ptrdiff_t>(n);
    k[j] = scale * static_cast<double>(index);
  }
  return k;
}

void Grid1D::validate() const {
  if (n < 8 || !std::has_single_bit(n)) {
    throw InvalidArgument("grid point count must be a power of two >= 8, got " + std::to_string(n));
  }
  if (!(dx > 0.0) || !std::isfinite(dx) || !std::isfinite(x_min)) {
    throw InvalidArgument("grid spacing must be positive and finite");
  }
}

bool operator==(const Grid1D& lhs, const Grid1D& rhs) {
  return lhs.n == rhs.n && lhs.x_min == rhs.x_min && lhs.dx == rhs.dx;
}

void PhysicalParams::validate() const {
  if (!(hbar > 0.0) || !(mass_a > 0.0) || !(mass_b > 0.0)) {
    throw InvalidArgument("hbar and both masses must be strictly positive");
  }
}

WaveFunction2D::WaveFunction2D(Grid1D grid_x, Grid1D grid_y)
    : grid_x_(grid_x), grid_y_(grid_y), amplitudes_(grid_x.n * grid_y.n) {
  grid_x_.validate();
  grid_y_.validate();
}

WaveFunction2D::WaveFunction2D(Grid1D grid_x, Grid1D grid_y, std::vector<complex> amplitudes)
    : grid_x_(grid_x), grid_y_(grid_y), amplitudes_(std::move(amplitudes)) {
  grid_x_.validate();
  grid_y_.validate();
  if (amplitudes_.size() != grid_x_.n * grid_y_.n) {
    throw InvalidArgument("amplitude count does not match grid shape");
  }
}

bool WaveFunction2D::contains(Point p) const {
  return p.x >= grid_x_.lower_edge() && p.x < grid_x_.upper_edge() &&
         p.y >= grid_y_.lower_edge() && p.y < grid_y_.upper_edge();
}

WaveFunction2D& WaveFunction2D::operator*=(complex factor) {
  for (auto& a : amplitudes_) a *= factor;
  return *this;
}

WaveFunction2D& WaveFunction2D::operator+=(const WaveFunction2D& other) {
  if (!(grid_x_ == other.grid_x_) || !(grid_y_ == other.grid_y_)) {
    throw InvalidArgument("cannot add wave functions on different grids");
  }
  for (std::size_t i = 0; i < amplitudes_.size(); ++i) amplitudes_[i] += other.amplitudes_[i];
  return *this;
}

WaveFunction2D operator*(complex factor, WaveFunction2D psi) { return psi *= factor; }

WaveFunction2D operator+(WaveFunction2D lhs, const WaveFunction2D& rhs) { return lhs += rhs; }

WaveFunction2D operator-(WaveFunction2D lhs, const WaveFunction2D& rhs) {
  return lhs += complex(-1.0) * rhs;
}

complex inner_product(const WaveFunction2D& lhs, const WaveFunction2D& rhs) {
  if (!(lhs.grid_x() == rhs.grid_x()) || !(lhs.grid_y() == rhs.grid_y())) {
    throw InvalidArgument("inner product of wave functions on different grids");
  }
  const auto a = lhs.amplitudes();
  const auto b = rhs.amplitudes();
  complex sum{};
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::conj(a[i]) * b[i];
  return sum * lhs.cell_area();
}

double max_abs_difference(const WaveFunction2D& lhs, const WaveFunction2D& rhs) {
  const auto a = lhs.amplitudes();
  const auto b = rhs.amplitudes();
  if (a.size() != b.size()) throw InvalidArgument("shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

std::vector<complex> gaussian_packet(const Grid1D& grid, const GaussianSpec& spec, double hbar) {
  if (!(spec.width > 0.0)) throw InvalidArgument("Gaussian width must be positive");
  std::vector<complex> packet(grid.n);
  const double inv_four_w2 = 1.0 / (4.0 * spec.width * spec.width);
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double u = grid.point(j) - spec.center;
    packet[j] = std::exp(-u * u * inv_four_w2) * std::polar(1.0, spec.momentum * grid.point(j) / hbar);
  }
  return packet;
}

WaveFunction2D build_superposition(const Grid1D& grid_x, const Grid1D& grid_y,
                                   std::span<const SuperpositionTerm> terms, double hbar) {
  if (terms.empty()) throw InvalidArgument("superposition needs at least one term");
  WaveFunction2D psi(grid_x, grid_y);
  for (const auto& term : terms) {
    auto ga = gaussian_packet(grid_x, term.packet_a, hbar);
    const auto gb = gaussian_packet(grid_y, term.packet_b, hbar);
    for (auto& v : ga) v *= term.coefficient;
    for (std::size_t ix = 0; ix < grid_x.n; ++ix) {
      for (std::size_t iy = 0; iy < grid_y.n; ++iy) psi(ix, iy) += ga[ix] * gb[iy];
    }
  }
  return normalize(std::move(psi));
}

double norm_squared(const WaveFunction2D& psi) {
  double sum = 0.0;
  for (const auto& a : psi.amplitudes()) sum += std::norm(a);
  return sum * psi.cell_area();
}

WaveFunction2D normalize(WaveFunction2D psi) {
  const double n2 = norm_squared(psi);
  if (!(n2 > 0.0) || !std::isfinite(n2)) {
    throw ZeroNormError("cannot normalize a wave function with zero norm");
  }
  psi *= complex(1.0 / std::sqrt(n2));
  return psi;
}

double boundary_mass(const WaveFunction2D& psi, Axis axis) {
  const std::size_t nx = psi.nx();
  const std::size_t ny = psi.ny();
  double sum = 0.0;
  if (axis == Axis::a) {
    for (std::size_t ix : {std::size_t{0}, std::size_t{1}, nx - 2, nx - 1}) {
      for (std::size_t iy = 0; iy < ny; ++iy) sum += std::norm(psi(ix, iy));
    }
  } else {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      for (std::size_t iy : {std::size_t{0}, std::size_t{1}, ny - 2, ny - 1}) sum += std::norm(psi(ix, iy));
    }
  }
  return sum * psi.cell_area();
}

void check_boundary_mass(const WaveFunction2D& psi) {
  for (Axis axis : {Axis::a, Axis::b}) {
    const double mass = boundary_mass(psi, axis);
    if (!(mass < kBoundaryMassLimit)) throw BoundaryMassError(axis, mass);
  }
}

std::vector<double> cell_probabilities(const WaveFunction2D& psi) {
  std::vector<double> p(psi.size());
  const auto amps = psi.amplitudes();
  const double area = psi.cell_area();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(amps[i]) * area;
  return p;
}

std::vector<double> marginal(const WaveFunction2D& psi, Axis axis) {
  const auto p = cell_probabilities(psi);
  const std::size_t nx = psi.nx();
  const std::size_t ny = psi.ny();
  std::vector<double> out(axis == Axis::a ? nx : ny, 0.0);
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) out[axis == Axis::a ? ix : iy] += p[ix * ny + iy];
  }
  return out;
}

namespace {

double uniform01(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Index of the first cumulative entry exceeding u * total, skipping empty cells.
std::size_t pick(std::span<const double> cumulative, double u) {
  const double target = u * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

}  // namespace

std::vector<Point> sample_positions(const WaveFunction2D& psi, std::size_t count, std::uint64_t seed) {
  const std::size_t nx = psi.nx();
  const std::size_t ny = psi.ny();
  const auto p = cell_probabilities(psi);

  std::vector<double> row_cumulative(p.size());
  std::vector<double> x_cumulative(nx);
  double running = 0.0;
  for (std::size_t ix = 0; ix < nx; ++ix) {
    double row = 0.0;
    for (std::size_t iy = 0; iy < ny; ++iy) {
      row += p[ix * ny + iy];
      row_cumulative[ix * ny + iy] = row;
    }
    running += row;
    x_cumulative[ix] = running;
  }
  if (!(running > 0.0)) throw ZeroNormError("cannot sample from a zero wave function");

  std::mt19937_64 engine(seed);
  std::vector<Point> points;
  points.reserve(count);
  const auto& gx = psi.grid_x();
  const auto& gy = psi.grid_y();
  for (std::size_t s = 0; s < count; ++s) {
    const std::size_t ix = pick(x_cumulative, uniform01(engine));
    const std::size_t iy = pick(std::span<const double>(row_cumulative).subspan(ix * ny, ny), uniform01(engine));
    const double jx = uniform01(engine) - 0.5;
    const double jy = uniform01(engine) - 0.5;
    points.push_back({gx.point(ix) + jx * gx.dx, gy.point(iy) + jy * gy.dx});
  }
  return points;
}

}  // namespace bohmchsh
