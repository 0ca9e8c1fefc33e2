#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "bohmchsh/bohm.hpp"
#include "bohmchsh/measurement.hpp"

namespace bohmchsh {

template <class T>
using Cells = std::array<std::array<T, 2>, 2>;

/// Alice's and Bob's two measurement-time choices; index 0 is choice 1.
struct ExperimentSettings {
  std::array<double, 2> alice_times{0.0, 1.0};
  std::array<double, 2> bob_times{0.0, 1.0};
  double alice_threshold = 0.0;
  double bob_threshold = 0.0;

  SignObservable alice(int a) const { return {Axis::a, alice_times[a], alice_threshold}; }
  SignObservable bob(int b) const { return {Axis::b, bob_times[b], bob_threshold}; }
  double max_time() const;
  void validate() const;
};

struct CorrelationTable {
  std::string estimator;
  Cells<double> correlation{};
  Cells<double> std_error{};
  /// p(A = +1) and p(B = +1) per (a, b) cell.
  Cells<double> marginal_a{};
  Cells<double> marginal_b{};
  Cells<std::size_t> samples{};
  IntegratorStats diagnostics;
};

struct ChshValue {
  double s = 0.0;
  double std_error = 0.0;
};

/// S = |E11 + E12 + E21 - E22|, error by quadrature over the cells.
ChshValue chsh_value(const CorrelationTable& table);

/// Largest change of `side`'s outcome marginal when only the other party's
/// choice changes, in units of the pooled binomial standard error.
/// Exact tables (no samples) return the raw difference.
double signalling_score(const CorrelationTable& table, Axis side);

CorrelationTable run_quantum(const WaveFunction2D& psi0, const ExperimentSettings& settings,
                             const PhysicalParams& params);

/// Raised when more than the allowed fraction of trajectories fail.
class TrajectoryFailureError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline constexpr double kMaxFailureFraction = 1e-3;

/// Unmeasured Bohmian trajectories: one ensemble lambda ~ |psi0|^2, every
/// outcome read off the same trajectories.
CorrelationTable run_naive_trajectories(const WaveFunction2D& psi0, const ExperimentSettings& settings,
                                        const PhysicalParams& params, std::size_t n, std::uint64_t seed,
                                        const IntegratorConfig& config);

/// Who is measured first when t_a == t_b.
enum class TieOrder { alice_first, bob_first };

struct CollapseOptions {
  TieOrder tie_order = TieOrder::alice_first;
  std::size_t threads = 1;
};

/// Detector-coupled sequential measurement: a fresh ensemble per cell, the
/// earlier measurement read from the Bohmian position collapses the state on
/// its axis and the registered particle stops; the other particle continues
/// under the collapsed state until its own measurement.
CorrelationTable run_collapse(const WaveFunction2D& psi0, const ExperimentSettings& settings,
                              const PhysicalParams& params, std::size_t n, std::uint64_t seed,
                              const IntegratorConfig& config, const CollapseOptions& options = {});

nlohmann::json to_json(const ExperimentSettings& settings);
ExperimentSettings settings_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CorrelationTable& table);

/// One row per cell: estimator,a,b,t_a,t_b,E,stderr,p_A,p_B,n
void write_table_csv(std::ostream& out, const CorrelationTable& table, const ExperimentSettings& settings,
                     bool header = true);

}  // namespace bohmchsh
