#include "bohmchsh/bohm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>

#include "bohmchsh/propagator.hpp"
#include "fft.hpp"

namespace bohmchsh {

using detail::fft_axis;
using detail::FftDirection;

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(max_step > 0.0) || !(node_epsilon > 0.0) || !(max_speed > 0.0)) {
    throw InvalidArgument("integrator tolerances, step, node_epsilon and max_speed must be positive");
  }
}

FieldStats& FieldStats::operator+=(const FieldStats& other) {
  evaluations += other.evaluations;
  floor_events += other.floor_events;
  clamp_events += other.clamp_events;
  return *this;
}

IntegratorStats& IntegratorStats::operator+=(const IntegratorStats& other) {
  accepted_steps += other.accepted_steps;
  rejected_steps += other.rejected_steps;
  fields_computed += other.fields_computed;
  failures += other.failures;
  field += other.field;
  return *this;
}

namespace {

// i*k multipliers for a spectral first derivative, Nyquist mode dropped,
// folded with the 1/n inverse-transform scale.
std::vector<complex> derivative_multipliers(const Grid1D& grid) {
  auto k = grid.wavenumbers();
  k[grid.n / 2] = 0.0;
  std::vector<complex> out(grid.n);
  const double inv_n = 1.0 / static_cast<double>(grid.n);
  for (std::size_t j = 0; j < grid.n; ++j) out[j] = complex(0.0, k[j] * inv_n);
  return out;
}

void scale_axis(std::span<complex> data, std::size_t nx, std::size_t ny, Axis axis,
                std::span<const complex> factors) {
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) data[ix * ny + iy] *= factors[axis == Axis::a ? ix : iy];
  }
}

void transform(std::span<complex> data, std::size_t nx, std::size_t ny, Clocks axes, FftDirection direction) {
  for (Axis axis : {Axis::a, Axis::b}) {
    if (advances(axes, axis)) fft_axis(data, nx, ny, axis, direction);
  }
}

struct Tables {
  std::vector<double> density;
  std::vector<double> flux_a;
  std::vector<double> flux_b;
};

// |psi|^2 and (hbar/m) Im(psi* d psi) from psi and the spectrum of the
// state along the moving axes (already carrying any evolution phases).
Tables tabulate(std::span<const complex> psi, const WaveFunction2D& spectrum_like, std::span<const complex> spectrum,
                const PhysicalParams& params, Clocks moving) {
  const std::size_t nx = spectrum_like.nx();
  const std::size_t ny = spectrum_like.ny();
  Tables t;
  t.density.resize(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) t.density[i] = std::norm(psi[i]);

  std::vector<complex> work(spectrum.size());
  for (Axis axis : {Axis::a, Axis::b}) {
    if (!advances(moving, axis)) continue;
    std::copy(spectrum.begin(), spectrum.end(), work.begin());
    const auto multipliers = derivative_multipliers(spectrum_like.grid(axis));
    scale_axis(work, nx, ny, axis, multipliers);
    // The other moving axis still needs its 1/n inverse scale.
    for (Axis other : {Axis::a, Axis::b}) {
      if (other != axis && advances(moving, other)) {
        const double inv_n = 1.0 / static_cast<double>(spectrum_like.grid(other).n);
        for (auto& w : work) w *= inv_n;
      }
    }
    transform(work, nx, ny, moving, FftDirection::backward);
    auto& flux = axis == Axis::a ? t.flux_a : t.flux_b;
    flux.resize(psi.size());
    const double factor = params.hbar / params.mass(axis);
    for (std::size_t i = 0; i < psi.size(); ++i) flux[i] = factor * std::imag(std::conj(psi[i]) * work[i]);
  }
  return t;
}

struct Bilinear {
  std::size_t i0, i1;
  double f;
};

Bilinear locate(const Grid1D& grid, double u) {
  const double s = (u - grid.x_min) / grid.dx;
  const double base = std::floor(s);
  const auto n = static_cast<std::ptrdiff_t>(grid.n);
  auto i0 = static_cast<std::ptrdiff_t>(base) % n;
  if (i0 < 0) i0 += n;
  const auto i1 = (i0 + 1) % n;
  return {static_cast<std::size_t>(i0), static_cast<std::size_t>(i1), s - base};
}

double interpolate(std::span<const double> table, std::size_t ny, const Bilinear& bx, const Bilinear& by) {
  const double v00 = table[bx.i0 * ny + by.i0];
  const double v01 = table[bx.i0 * ny + by.i1];
  const double v10 = table[bx.i1 * ny + by.i0];
  const double v11 = table[bx.i1 * ny + by.i1];
  return (1.0 - bx.f) * ((1.0 - by.f) * v00 + by.f * v01) + bx.f * ((1.0 - by.f) * v10 + by.f * v11);
}

}  // namespace

VelocityField::VelocityField(const WaveFunction2D& psi, const PhysicalParams& params, const IntegratorConfig& config,
                             Clocks moving)
    : grid_x_(psi.grid_x()), grid_y_(psi.grid_y()), max_speed_(config.max_speed) {
  params.validate();
  config.validate();
  std::vector<complex> spectrum(psi.amplitudes().begin(), psi.amplitudes().end());
  transform(spectrum, psi.nx(), psi.ny(), moving, FftDirection::forward);
  auto tables = tabulate(psi.amplitudes(), psi, spectrum, params, moving);
  density_ = std::move(tables.density);
  flux_a_ = std::move(tables.flux_a);
  flux_b_ = std::move(tables.flux_b);
  floor_ = config.node_epsilon * *std::max_element(density_.begin(), density_.end());
}

VelocityField VelocityField::from_tables(const Grid1D& grid_x, const Grid1D& grid_y, std::vector<double> density,
                                        std::vector<double> flux_a, std::vector<double> flux_b,
                                        const IntegratorConfig& config) {
  VelocityField field;
  field.grid_x_ = grid_x;
  field.grid_y_ = grid_y;
  field.density_ = std::move(density);
  field.flux_a_ = std::move(flux_a);
  field.flux_b_ = std::move(flux_b);
  field.max_speed_ = config.max_speed;
  field.floor_ = config.node_epsilon * *std::max_element(field.density_.begin(), field.density_.end());
  return field;
}

bool VelocityField::contains(Point p) const {
  return p.x >= grid_x_.lower_edge() && p.x < grid_x_.upper_edge() && p.y >= grid_y_.lower_edge() &&
         p.y < grid_y_.upper_edge();
}

Velocity VelocityField::at(Point p) const {
  FieldStats ignored;
  return at(p, ignored);
}

Velocity VelocityField::at(Point p, FieldStats& stats) const {
  if (!contains(p)) throw OutOfDomainError("velocity requested outside the grid domain");
  const auto bx = locate(grid_x_, p.x);
  const auto by = locate(grid_y_, p.y);
  const std::size_t ny = grid_y_.n;
  ++stats.evaluations;
  double density = interpolate(density_, ny, bx, by);
  if (density < floor_) {
    density = floor_;
    ++stats.floor_events;
  }
  Velocity v;
  bool clamped = false;
  auto component = [&](const std::vector<double>& flux) {
    if (flux.empty()) return 0.0;
    const double raw = interpolate(flux, ny, bx, by) / density;
    if (std::abs(raw) > max_speed_) {
      clamped = true;
      return std::copysign(max_speed_, raw);
    }
    return raw;
  };
  v.a = component(flux_a_);
  v.b = component(flux_b_);
  if (clamped) ++stats.clamp_events;
  return v;
}

Velocity velocity_field(const WaveFunction2D& psi, const PhysicalParams& params, Point point,
                        const IntegratorConfig& config) {
  return VelocityField(psi, params, config).at(point);
}

GuidanceField::GuidanceField(WaveFunction2D base, double base_time, PhysicalParams params, IntegratorConfig config,
                             Clocks clocks)
    : base_(std::move(base)), spectrum_(base_), base_time_(base_time), params_(params), config_(config),
      clocks_(clocks) {
  params_.validate();
  config_.validate();
  transform(spectrum_.amplitudes(), spectrum_.nx(), spectrum_.ny(), clocks_, FftDirection::forward);
}

WaveFunction2D GuidanceField::state_at(double t) const {
  const double dt = t - base_time_;
  return free_evolve(base_, advances(clocks_, Axis::a) ? dt : 0.0, advances(clocks_, Axis::b) ? dt : 0.0, params_);
}

std::shared_ptr<const VelocityField> GuidanceField::at(double t) {
  for (auto it = cache_.begin(); it != cache_.end(); ++it) {
    if (it->first == t) {
      auto hit = *it;
      cache_.erase(it);
      cache_.push_front(hit);
      return hit.second;
    }
  }
  const double dt = t - base_time_;
  const std::size_t nx = base_.nx();
  const std::size_t ny = base_.ny();
  const bool move_a = advances(clocks_, Axis::a);
  const bool move_b = advances(clocks_, Axis::b);

  // Per-axis factors: free phase (identity on a stopped axis) with the
  // inverse-transform scale folded in, and i*k for the derivative.
  auto axis_factors = [&](Axis axis, bool moving) {
    const Grid1D& grid = base_.grid(axis);
    std::vector<complex> phase(grid.n, complex(1.0));
    std::vector<complex> ik(grid.n, complex(0.0));
    if (moving) {
      phase = free_phases(grid, dt, params_.hbar, params_.mass(axis));
      for (auto& p : phase) p /= static_cast<double>(grid.n);
      ik = derivative_multipliers(grid);
      for (auto& d : ik) d *= static_cast<double>(grid.n);
    }
    return std::pair{phase, ik};
  };
  const auto [phase_a, ik_a] = axis_factors(Axis::a, move_a);
  const auto [phase_b, ik_b] = axis_factors(Axis::b, move_b);

  const std::size_t size = nx * ny;
  work_psi_.resize(size);
  if (move_a) work_da_.resize(size);
  if (move_b) work_db_.resize(size);
  const auto spectrum = spectrum_.amplitudes();
  for (std::size_t ix = 0; ix < nx; ++ix) {
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const std::size_t i = ix * ny + iy;
      const complex g = spectrum[i] * (phase_a[ix] * phase_b[iy]);
      work_psi_[i] = g;
      if (move_a) work_da_[i] = g * ik_a[ix];
      if (move_b) work_db_[i] = g * ik_b[iy];
    }
  }
  transform(work_psi_, nx, ny, clocks_, FftDirection::backward);
  if (move_a) transform(work_da_, nx, ny, clocks_, FftDirection::backward);
  if (move_b) transform(work_db_, nx, ny, clocks_, FftDirection::backward);

  std::vector<double> density(size);
  std::vector<double> flux_a(move_a ? size : 0);
  std::vector<double> flux_b(move_b ? size : 0);
  const double factor_a = params_.hbar / params_.mass_a;
  const double factor_b = params_.hbar / params_.mass_b;
  for (std::size_t i = 0; i < size; ++i) {
    const complex psi = work_psi_[i];
    density[i] = std::norm(psi);
    if (move_a) flux_a[i] = factor_a * (psi.real() * work_da_[i].imag() - psi.imag() * work_da_[i].real());
    if (move_b) flux_b[i] = factor_b * (psi.real() * work_db_[i].imag() - psi.imag() * work_db_[i].real());
  }

  const double area = base_.cell_area();
  for (Axis axis : {Axis::a, Axis::b}) {
    double edge = 0.0;
    if (axis == Axis::a) {
      for (std::size_t ix : {std::size_t{0}, std::size_t{1}, nx - 2, nx - 1}) {
        for (std::size_t iy = 0; iy < ny; ++iy) edge += density[ix * ny + iy];
      }
    } else {
      for (std::size_t ix = 0; ix < nx; ++ix) {
        for (std::size_t iy : {std::size_t{0}, std::size_t{1}, ny - 2, ny - 1}) edge += density[ix * ny + iy];
      }
    }
    if (!(edge * area < kBoundaryMassLimit)) throw BoundaryMassError(axis, edge * area);
  }

  auto field = std::make_shared<const VelocityField>(VelocityField::from_tables(
      base_.grid_x(), base_.grid_y(), std::move(density), std::move(flux_a), std::move(flux_b), config_));
  ++fields_computed_;
  cache_.emplace_front(t, field);
  if (cache_.size() > kCacheSize) cache_.pop_back();
  return field;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr std::array<double, 7> kC{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
// Fifth-order minus embedded fourth-order weights.
constexpr std::array<double, 7> kE{71.0 / 57600,      0.0, -71.0 / 16695, 71.0 / 1920,
                                   -17253.0 / 339200, 22.0 / 525, -1.0 / 40};

constexpr double kMinStep = 1e-9;
constexpr double kSafety = 0.9;
constexpr double kMinShrink = 0.2;
constexpr double kMaxGrow = 5.0;

struct Slot {
  Point y;
  std::array<Velocity, 7> k;
  double err = 0.0;
  bool left = false;
};

}  // namespace

EnsembleRun integrate_ensemble(GuidanceField& field, std::span<const Point> starts, double t0,
                               std::span<const double> stops, const IntegratorConfig& config) {
  config.validate();
  if (stops.empty()) throw InvalidArgument("integrate_ensemble needs at least one stop time");
  for (std::size_t s = 0; s < stops.size(); ++s) {
    if (stops[s] < t0 || (s > 0 && stops[s] < stops[s - 1])) {
      throw InvalidArgument("stop times must be ascending and not before the start time");
    }
  }

  const std::size_t n = starts.size();
  EnsembleRun run;
  run.status.assign(n, TrajectoryStatus::ok);
  run.positions.assign(stops.size(), std::vector<Point>(starts.begin(), starts.end()));
  const std::uint64_t fields_before = field.fields_computed();

  std::vector<Slot> slots(n);
  std::vector<std::size_t> active;
  active.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    slots[i].y = starts[i];
    if (field.at(t0)->contains(starts[i])) {
      active.push_back(i);
    } else {
      run.status[i] = TrajectoryStatus::left_domain;
    }
  }

  auto fail = [&](std::size_t i, TrajectoryStatus why) {
    run.status[i] = why;
    ++run.stats.failures;
  };
  run.stats.failures = n - active.size();

  // First-same-as-last: k[0] of an accepted step is k[6] of the previous one.
  {
    auto f0 = field.at(t0);
    for (std::size_t i : active) slots[i].k[0] = f0->at(slots[i].y, run.stats.field);
  }

  double t = t0;
  double h = config.max_step;
  for (std::size_t s = 0; s < stops.size(); ++s) {
    const double t_stop = stops[s];
    while (t < t_stop && !active.empty()) {
      const bool final_step = h >= t_stop - t;
      const double step = final_step ? t_stop - t : h;

      for (int stage = 1; stage < 7; ++stage) {
        auto f = field.at(t + kC[stage] * step);
        for (std::size_t i : active) {
          Slot& slot = slots[i];
          if (slot.left) continue;
          Point q = slot.y;
          for (int j = 0; j < stage; ++j) {
            q.x += step * kA[stage][j] * slot.k[j].a;
            q.y += step * kA[stage][j] * slot.k[j].b;
          }
          if (!f->contains(q)) {
            slot.left = true;
            continue;
          }
          slot.k[stage] = f->at(q, run.stats.field);
        }
      }

      double worst = 0.0;
      for (std::size_t i : active) {
        Slot& slot = slots[i];
        if (slot.left) {
          slot.err = std::numeric_limits<double>::infinity();
          worst = slot.err;
          continue;
        }
        double ex = 0.0;
        double ey = 0.0;
        for (int j = 0; j < 7; ++j) {
          ex += kE[j] * slot.k[j].a;
          ey += kE[j] * slot.k[j].b;
        }
        ex *= step;
        ey *= step;
        const Point next{slot.y.x + step * (kA[6][0] * slot.k[0].a + kA[6][2] * slot.k[2].a + kA[6][3] * slot.k[3].a +
                                            kA[6][4] * slot.k[4].a + kA[6][5] * slot.k[5].a),
                         slot.y.y + step * (kA[6][0] * slot.k[0].b + kA[6][2] * slot.k[2].b + kA[6][3] * slot.k[3].b +
                                            kA[6][4] * slot.k[4].b + kA[6][5] * slot.k[5].b)};
        const double sx = config.abs_tol + config.rel_tol * std::max(std::abs(slot.y.x), std::abs(next.x));
        const double sy = config.abs_tol + config.rel_tol * std::max(std::abs(slot.y.y), std::abs(next.y));
        slot.err = std::sqrt(0.5 * ((ex / sx) * (ex / sx) + (ey / sy) * (ey / sy)));
        worst = std::max(worst, slot.err);
      }

      bool accept = worst <= 1.0;
      if (!accept && step <= kMinStep) {
        // The step cannot shrink further; retire the offenders, keep the rest.
        std::vector<std::size_t> kept;
        kept.reserve(active.size());
        for (std::size_t i : active) {
          if (slots[i].err > 1.0) {
            fail(i, slots[i].left ? TrajectoryStatus::left_domain : TrajectoryStatus::step_underflow);
          } else {
            kept.push_back(i);
          }
        }
        active.swap(kept);
        accept = true;
        worst = 1.0;
      }

      if (!accept) {
        ++run.stats.rejected_steps;
        for (std::size_t i : active) slots[i].left = false;
        h = step * std::max(kMinShrink, kSafety * std::pow(worst, -0.2));
        continue;
      }

      ++run.stats.accepted_steps;
      for (std::size_t i : active) {
        Slot& slot = slots[i];
        slot.y.x += step * (kA[6][0] * slot.k[0].a + kA[6][2] * slot.k[2].a + kA[6][3] * slot.k[3].a +
                            kA[6][4] * slot.k[4].a + kA[6][5] * slot.k[5].a);
        slot.y.y += step * (kA[6][0] * slot.k[0].b + kA[6][2] * slot.k[2].b + kA[6][3] * slot.k[3].b +
                            kA[6][4] * slot.k[4].b + kA[6][5] * slot.k[5].b);
        slot.k[0] = slot.k[6];
      }
      t = final_step ? t_stop : t + step;
      const double grow = worst > 0.0 ? kSafety * std::pow(worst, -0.2) : kMaxGrow;
      const double proposed = step * std::clamp(grow, kMinShrink, kMaxGrow);
      // A step clipped at a stop says nothing about the admissible size.
      h = std::min(config.max_step, final_step ? std::max(h, proposed) : proposed);
    }
    for (std::size_t i : active) run.positions[s][i] = slots[i].y;
  }
  run.stats.fields_computed = field.fields_computed() - fields_before;
  return run;
}

Trajectory integrate_trajectory(const WaveFunction2D& psi0, const PhysicalParams& params, Point q0, double t0,
                                double t1, const IntegratorConfig& config, std::span<const double> samples) {
  if (!(t1 > t0)) throw InvalidArgument("integrate_trajectory needs t1 > t0");
  if (!psi0.contains(q0)) throw OutOfDomainError("trajectory start lies outside the grid domain");
  std::vector<double> stops{t0};
  for (double s : samples) {
    if (s > t0 && s < t1) stops.push_back(s);
  }
  stops.push_back(t1);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

  GuidanceField field(psi0, t0, params, config);
  const Point start[] = {q0};
  auto run = integrate_ensemble(field, start, t0, stops, config);

  Trajectory trajectory;
  if (run.ok(0)) {
    trajectory.times = stops;
    for (const auto& at_stop : run.positions) trajectory.points.push_back(at_stop[0]);
    return trajectory;
  }
  // Partial record: every stop reached before the failure.
  GuidanceField replay(psi0, t0, params, config);
  trajectory.times.push_back(t0);
  trajectory.points.push_back(q0);
  for (std::size_t s = 1; s < stops.size(); ++s) {
    const double upto[] = {stops[s]};
    const Point from[] = {trajectory.points.back()};
    auto piece = integrate_ensemble(replay, from, trajectory.times.back(), upto, config);
    if (!piece.ok(0)) break;
    trajectory.times.push_back(stops[s]);
    trajectory.points.push_back(piece.positions[0][0]);
  }
  const char* why = run.status[0] == TrajectoryStatus::left_domain ? "trajectory left the grid domain"
                                                                   : "step size underflow near a node";
  throw TrajectoryError(why, std::move(trajectory));
}

void Trajectory::validate() const {
  if (times.empty() || times.size() != points.size()) {
    throw InvalidArgument("trajectory needs matching, non-empty time and point lists");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw InvalidArgument("trajectory times must be strictly increasing");
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,Q_A,Q_B\n";
  const auto precision = out.precision(17);
  for (std::size_t i = 0; i < trajectory.times.size(); ++i) {
    out << trajectory.times[i] << ',' << trajectory.points[i].x << ',' << trajectory.points[i].y << '\n';
  }
  out.precision(precision);
}

}  // namespace bohmchsh
