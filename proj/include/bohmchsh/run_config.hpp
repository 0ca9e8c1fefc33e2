#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohmchsh/chsh.hpp"
#include "bohmchsh/search.hpp"

namespace bohmchsh::cli {

/// Everything a CLI run needs; see docs/config.md for the file schema.
struct RunConfig {
  Grid1D grid_x = Grid1D::spanning(256, -20.0, 20.0);
  Grid1D grid_y = Grid1D::spanning(256, -20.0, 20.0);
  PhysicalParams physics;
  std::vector<SuperpositionTerm> terms;
  /// Saved state to use instead of `terms` (resolved against the config directory).
  std::optional<std::filesystem::path> state_file;
  ExperimentSettings settings;
  std::string estimator = "all";
  std::size_t samples = 4000;
  std::uint64_t seed = 1;
  IntegratorConfig integrator;
  std::vector<double> time_candidates{0.0, 0.5, 1.0, 2.0};
  SearchOptions search;
  /// Unset: time at which a unit-mass packet of the first term's A width doubles.
  std::optional<double> equivariance_time;
  std::size_t equivariance_samples = 10000;
  std::filesystem::path output_dir = "run";
  std::size_t threads = 1;

  void validate() const;
};

RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// The default two-term state with packets in opposite quadrants.
std::vector<SuperpositionTerm> quadrant_entangled_terms(double separation = 5.0, double width = 1.0);

/// Builds (terms) or loads (state_file) the configured initial state.
WaveFunction2D initial_state(const RunConfig& config);

/// Subcommands; each writes into config.output_dir and reports to `log`.
void cmd_prepare(const RunConfig& config, std::ostream& log);
void cmd_search(const RunConfig& config, std::ostream& log);
void cmd_run(const RunConfig& config, std::ostream& log);
void cmd_equivariance(const RunConfig& config, std::ostream& log);

}  // namespace bohmchsh::cli
