#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "bohmchsh/errors.hpp"
#include "bohmchsh/wavefunction.hpp"

namespace bohmchsh {

struct IntegratorConfig {
  double rel_tol = 1e-6;
  double abs_tol = 1e-8;
  double max_step = 0.01;
  /// Density floor relative to the grid maximum of |psi|^2.
  double node_epsilon = 1e-12;
  /// Per-component velocity clamp (length per unit time).
  double max_speed = 1e3;

  void validate() const;
};

/// Which particle clocks advance while integrating. A particle whose
/// position has been registered by a detector keeps its clock stopped.
enum class Clocks { both, a_only, b_only };

inline bool advances(Clocks clocks, Axis axis) {
  return clocks == Clocks::both || (axis == Axis::a ? clocks == Clocks::a_only : clocks == Clocks::b_only);
}

struct Velocity {
  double a = 0.0;
  double b = 0.0;
};

/// Regularization events seen while evaluating velocities.
struct FieldStats {
  std::uint64_t evaluations = 0;
  std::uint64_t floor_events = 0;
  std::uint64_t clamp_events = 0;

  FieldStats& operator+=(const FieldStats& other);
};

class OutOfDomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Guidance-equation velocity field of one wave function.
///
/// Im(psi* d_k psi) and |psi|^2 are tabulated on the grid (spectral
/// derivatives) and bilinearly interpolated separately; the quotient uses
/// max(|psi|^2, node_epsilon * max|psi|^2) and each component is clamped to
/// +-max_speed. Interpolation wraps periodically like the grid itself.
class VelocityField {
 public:
  VelocityField(const WaveFunction2D& psi, const PhysicalParams& params, const IntegratorConfig& config = {},
                Clocks moving = Clocks::both);

  Velocity at(Point p) const;
  Velocity at(Point p, FieldStats& stats) const;

  bool contains(Point p) const;
  double density_floor() const { return floor_; }

  /// Field from pre-tabulated |psi|^2 and velocity fluxes (hbar/m) Im(psi* d psi);
  /// an empty flux table means that particle does not move.
  static VelocityField from_tables(const Grid1D& grid_x, const Grid1D& grid_y, std::vector<double> density,
                                   std::vector<double> flux_a, std::vector<double> flux_b,
                                   const IntegratorConfig& config);

 private:
  VelocityField() = default;

  Grid1D grid_x_;
  Grid1D grid_y_;
  std::vector<double> density_;
  std::vector<double> flux_a_;
  std::vector<double> flux_b_;
  double floor_ = 0.0;
  double max_speed_ = 0.0;
};

Velocity velocity_field(const WaveFunction2D& psi, const PhysicalParams& params, Point point,
                        const IntegratorConfig& config = {});

/// Velocity fields of a freely evolving state, psi(t) = U(t - base_time) base
/// on the advancing axes. Fields are cached by time (small LRU). Not
/// thread-safe: give every worker its own instance.
class GuidanceField {
 public:
  GuidanceField(WaveFunction2D base, double base_time, PhysicalParams params, IntegratorConfig config,
                Clocks clocks = Clocks::both);

  std::shared_ptr<const VelocityField> at(double t);

  /// Evolved wave function at time t (boundary-mass checked).
  WaveFunction2D state_at(double t) const;

  Clocks clocks() const { return clocks_; }
  double base_time() const { return base_time_; }
  std::uint64_t fields_computed() const { return fields_computed_; }

 private:
  static constexpr std::size_t kCacheSize = 8;

  WaveFunction2D base_;
  WaveFunction2D spectrum_;
  double base_time_;
  PhysicalParams params_;
  IntegratorConfig config_;
  Clocks clocks_;
  std::deque<std::pair<double, std::shared_ptr<const VelocityField>>> cache_;
  std::vector<complex> work_psi_;
  std::vector<complex> work_da_;
  std::vector<complex> work_db_;
  std::uint64_t fields_computed_ = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Point> points;

  /// The hidden variable: the configuration at times.front().
  Point initial() const { return points.front(); }
  void validate() const;
};

class TrajectoryError : public NumericalError {
 public:
  TrajectoryError(const std::string& what, Trajectory partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

enum class TrajectoryStatus : std::uint8_t { ok, left_domain, step_underflow };

struct IntegratorStats {
  std::uint64_t accepted_steps = 0;
  std::uint64_t rejected_steps = 0;
  std::uint64_t fields_computed = 0;
  std::uint64_t failures = 0;
  FieldStats field;

  IntegratorStats& operator+=(const IntegratorStats& other);
};

struct EnsembleRun {
  /// positions[s][i]: trajectory i at stops[s]. Meaningless for failed i.
  std::vector<std::vector<Point>> positions;
  std::vector<TrajectoryStatus> status;
  IntegratorStats stats;

  bool ok(std::size_t i) const { return status[i] == TrajectoryStatus::ok; }
};

/// Lock-step adaptive Dormand-Prince 5(4) integration of many trajectories
/// through one guidance field. All trajectories share the step sequence, so
/// each stage time costs one field evaluation. Steps land exactly on every
/// stop; stops must be ascending and >= t0. A trajectory that leaves the
/// grid or needs a step below the underflow limit is marked failed and
/// dropped from the error control.
EnsembleRun integrate_ensemble(GuidanceField& field, std::span<const Point> starts, double t0,
                               std::span<const double> stops, const IntegratorConfig& config);

/// Single trajectory from q0 at t0 (psi0 is the state at t0) to t1, sampled at
/// t0, every instant in `samples` within (t0, t1), and t1.
Trajectory integrate_trajectory(const WaveFunction2D& psi0, const PhysicalParams& params, Point q0, double t0,
                                double t1, const IntegratorConfig& config = {}, std::span<const double> samples = {});

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace bohmchsh
