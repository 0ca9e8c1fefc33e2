#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohmchsh/chsh.hpp"
#include "bohmchsh/propagator.hpp"

namespace bohmchsh {

/// A(t) psi = U(-t) sign(x - threshold) U(t) psi on the observable's axis.
WaveFunction2D apply_heisenberg_sign(const WaveFunction2D& psi, const SignObservable& obs, const PhysicalParams& params,
                                     BoundaryCheck check = BoundaryCheck::enforce);

/// C = A1 B1 + A1 B2 + A2 B1 - A2 B2 with Heisenberg sign observables.
WaveFunction2D apply_chsh_operator(const WaveFunction2D& psi, const ExperimentSettings& settings,
                                   const PhysicalParams& params, BoundaryCheck check = BoundaryCheck::enforce);

/// Restriction of the state search to span{h_i(x) h_j(y)}, h_i the first
/// `functions_per_axis` Hermite functions whose ground state has |h_0|^2
/// standard deviation `scale`. functions_per_axis == 0 searches the whole grid.
struct SearchSubspace {
  std::size_t functions_per_axis = 16;
  double scale = 1.0;

  bool full_grid() const { return functions_per_axis == 0; }
};

struct SearchOptions {
  double tol = 1e-8;
  std::size_t max_iter = 5000;
  std::uint64_t seed = 1;
  double shift = 3.0;
  SearchSubspace subspace;
};

struct EigenResult {
  double eigenvalue = 0.0;
  WaveFunction2D state;
  std::size_t iterations = 0;
  double residual = 0.0;
  /// Rayleigh quotient of C at every iterate.
  std::vector<double> rayleigh_history;
};

/// Hermite functions sampled on `grid` and orthonormalized in the discrete
/// inner product; column i is h_i.
std::vector<std::vector<complex>> hermite_basis(const Grid1D& grid, std::size_t count, double scale);

/// Top eigenpair of C (restricted to the configured subspace) by power
/// iteration on C + shift. Throws ConvergenceError after max_iter.
EigenResult find_max_violation_state(const Grid1D& grid_x, const Grid1D& grid_y, const ExperimentSettings& settings,
                                     const PhysicalParams& params, const SearchOptions& options = {});

struct ScanEntry {
  ExperimentSettings settings;
  bool converged = false;
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
  double residual = 0.0;
  std::string error;
};

struct ScanReport {
  /// Converged entries by eigenvalue descending, then failures.
  std::vector<ScanEntry> entries;
  EigenResult best;
};

/// Every non-degenerate (t_a1 < t_a2, t_b1 < t_b2) combination of the
/// candidate times, thresholds from `thresholds`.
std::vector<ExperimentSettings> settings_combinations(std::span<const double> time_candidates,
                                                      const ExperimentSettings& thresholds = {});

ScanReport scan_settings(const Grid1D& grid_x, const Grid1D& grid_y, std::span<const double> time_candidates,
                         const PhysicalParams& params, const SearchOptions& options = {}, std::size_t threads = 1);

nlohmann::json to_json(const ScanReport& report);

}  // namespace bohmchsh
