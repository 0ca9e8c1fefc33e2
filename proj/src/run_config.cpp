#include "bohmchsh/run_config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "bohmchsh/diagnostics.hpp"
#include "bohmchsh/errors.hpp"
#include "bohmchsh/state_io.hpp"

namespace bohmchsh::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

GaussianSpec packet_from_json(const json& j) {
  GaussianSpec g;
  g.center = j.value("center", g.center);
  g.width = j.value("width", g.width);
  g.momentum = j.value("momentum", g.momentum);
  return g;
}

json to_json(const GaussianSpec& g) {
  return {{"center", g.center}, {"width", g.width}, {"momentum", g.momentum}};
}

Grid1D grid_from_json(const json& j, const char* n_key, const char* range_key) {
  const auto n = j.value(n_key, std::size_t{256});
  const auto range = j.value(range_key, std::array<double, 2>{-20.0, 20.0});
  if (!(range[1] > range[0])) throw InvalidArgument(std::string("grid.") + range_key + " must be increasing");
  return Grid1D::spanning(n, range[0], range[1]);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  writer(out);
}

// Fresh run directory: created if missing, refused if it already holds files.
void prepare_output(const RunConfig& config) {
  const auto& dir = config.output_dir;
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    throw InvalidArgument("output directory " + dir.string() + " is not empty; runs never overwrite earlier runs");
  }
  fs::create_directories(dir);
  write_json(dir / "config.json", to_json(config));
}

std::string fixed(double v, int digits = 6) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, v);
  return buffer;
}

}  // namespace

void RunConfig::validate() const {
  grid_x.validate();
  grid_y.validate();
  physics.validate();
  settings.validate();
  integrator.validate();
  if (!state_file && terms.empty()) throw InvalidArgument("state needs either terms or a file");
  for (const auto& t : terms) {
    if (!(t.packet_a.width > 0.0) || !(t.packet_b.width > 0.0)) throw InvalidArgument("packet widths must be positive");
  }
  if (estimator != "quantum" && estimator != "naive" && estimator != "collapse" && estimator != "all") {
    throw InvalidArgument("unknown estimator '" + estimator + "' (expected quantum, naive, collapse or all)");
  }
  if (samples == 0) throw InvalidArgument("samples must be positive");
  if (equivariance_samples == 0) throw InvalidArgument("equivariance samples must be positive");
  if (equivariance_time && !(*equivariance_time >= 0.0)) throw InvalidArgument("equivariance time must be >= 0");
  if (time_candidates.empty()) throw InvalidArgument("search needs at least one time candidate");
  if (!(search.tol > 0.0) || search.max_iter == 0) throw InvalidArgument("search tol and max_iter must be positive");
  if (threads == 0) throw InvalidArgument("threads must be positive");
}

std::vector<SuperpositionTerm> quadrant_entangled_terms(double separation, double width) {
  const GaussianSpec plus{separation * width, width, 0.0};
  const GaussianSpec minus{-separation * width, width, 0.0};
  return {{complex(1.0), plus, minus}, {complex(1.0), minus, plus}};
}

RunConfig config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    c.grid_x = grid_from_json(g, "n_x", "x_range");
    c.grid_y = grid_from_json(g, "n_y", "y_range");
  }
  if (j.contains("physics")) {
    const auto& p = j["physics"];
    c.physics.hbar = p.value("hbar", c.physics.hbar);
    c.physics.mass_a = p.value("mass_a", c.physics.mass_a);
    c.physics.mass_b = p.value("mass_b", c.physics.mass_b);
  }
  const json state = j.value("state", json::object());
  if (state.contains("file")) {
    fs::path file = state["file"].get<std::string>();
    c.state_file = file.is_relative() ? base_dir / file : file;
  } else if (state.contains("terms")) {
    for (const auto& t : state["terms"]) {
      SuperpositionTerm term;
      const auto coeff = t.value("coefficient", std::array<double, 2>{1.0, 0.0});
      term.coefficient = complex(coeff[0], coeff[1]);
      term.packet_a = packet_from_json(t.at("a"));
      term.packet_b = packet_from_json(t.at("b"));
      c.terms.push_back(term);
    }
  } else {
    c.terms = quadrant_entangled_terms();
  }
  if (j.contains("settings")) c.settings = settings_from_json(j["settings"]);
  c.estimator = j.value("estimator", c.estimator);
  c.samples = j.value("samples", c.samples);
  c.seed = j.value("seed", c.seed);
  if (j.contains("integrator")) {
    const auto& i = j["integrator"];
    c.integrator.rel_tol = i.value("rel_tol", c.integrator.rel_tol);
    c.integrator.abs_tol = i.value("abs_tol", c.integrator.abs_tol);
    c.integrator.max_step = i.value("max_step", c.integrator.max_step);
    c.integrator.node_epsilon = i.value("node_epsilon", c.integrator.node_epsilon);
    c.integrator.max_speed = i.value("max_speed", c.integrator.max_speed);
  }
  if (j.contains("search")) {
    const auto& s = j["search"];
    c.time_candidates = s.value("time_candidates", c.time_candidates);
    c.search.tol = s.value("tol", c.search.tol);
    c.search.max_iter = s.value("max_iter", c.search.max_iter);
    c.search.shift = s.value("shift", c.search.shift);
    c.search.subspace.functions_per_axis = s.value("basis_functions", c.search.subspace.functions_per_axis);
    c.search.subspace.scale = s.value("basis_scale", c.search.subspace.scale);
  }
  if (j.contains("equivariance")) {
    const auto& e = j["equivariance"];
    if (e.contains("time") && !e["time"].is_null()) c.equivariance_time = e["time"].get<double>();
    c.equivariance_samples = e.value("samples", c.equivariance_samples);
  }
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  try {
    return config_from_json(j, path.parent_path());
  } catch (const json::exception& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
}

json to_json(const RunConfig& c) {
  json terms = json::array();
  for (const auto& t : c.terms) {
    terms.push_back({{"coefficient", {t.coefficient.real(), t.coefficient.imag()}},
                     {"a", to_json(t.packet_a)},
                     {"b", to_json(t.packet_b)}});
  }
  json state = c.state_file ? json{{"file", c.state_file->string()}} : json{{"terms", terms}};
  return {{"grid",
           {{"n_x", c.grid_x.n},
            {"n_y", c.grid_y.n},
            {"x_range", {c.grid_x.lower_edge(), c.grid_x.upper_edge()}},
            {"y_range", {c.grid_y.lower_edge(), c.grid_y.upper_edge()}}}},
          {"physics", {{"hbar", c.physics.hbar}, {"mass_a", c.physics.mass_a}, {"mass_b", c.physics.mass_b}}},
          {"state", state},
          {"settings", bohmchsh::to_json(c.settings)},
          {"estimator", c.estimator},
          {"samples", c.samples},
          {"seed", c.seed},
          {"integrator",
           {{"rel_tol", c.integrator.rel_tol},
            {"abs_tol", c.integrator.abs_tol},
            {"max_step", c.integrator.max_step},
            {"node_epsilon", c.integrator.node_epsilon},
            {"max_speed", c.integrator.max_speed}}},
          {"search",
           {{"time_candidates", c.time_candidates},
            {"tol", c.search.tol},
            {"max_iter", c.search.max_iter},
            {"shift", c.search.shift},
            {"basis_functions", c.search.subspace.functions_per_axis},
            {"basis_scale", c.search.subspace.scale}}},
          {"equivariance",
           {{"time", c.equivariance_time ? json(*c.equivariance_time) : json(nullptr)},
            {"samples", c.equivariance_samples}}},
          {"output_dir", c.output_dir.string()}};
}

WaveFunction2D initial_state(const RunConfig& config) {
  if (config.state_file) return normalize(load_state(*config.state_file));
  return build_superposition(config.grid_x, config.grid_y, config.terms, config.physics.hbar);
}

void cmd_prepare(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto psi = initial_state(config);
  check_boundary_mass(psi);
  prepare_output(config);

  const auto p = cell_probabilities(psi);
  std::array<double, 4> quadrants{};  // (x>=0,y>=0), (x>=0,y<0), (x<0,y>=0), (x<0,y<0)
  for (std::size_t ix = 0; ix < psi.nx(); ++ix) {
    for (std::size_t iy = 0; iy < psi.ny(); ++iy) {
      const bool xp = psi.grid_x().point(ix) >= 0.0;
      const bool yp = psi.grid_y().point(iy) >= 0.0;
      quadrants[(xp ? 0 : 2) + (yp ? 0 : 1)] += p[ix * psi.ny() + iy];
    }
  }
  const json report = {{"norm_squared", norm_squared(psi)},
                       {"boundary_mass_A", boundary_mass(psi, Axis::a)},
                       {"boundary_mass_B", boundary_mass(psi, Axis::b)},
                       {"quadrant_mass",
                        {{"x+y+", quadrants[0]}, {"x+y-", quadrants[1]}, {"x-y+", quadrants[2]}, {"x-y-", quadrants[3]}}}};
  save_state(config.output_dir / "state.bin", psi);
  write_file(config.output_dir / "density.csv", [&](std::ostream& out) { write_density_csv(out, psi); });
  write_json(config.output_dir / "prepare.json", report);

  log << "norm^2          " << fixed(norm_squared(psi), 12) << '\n'
      << "boundary mass   A " << report["boundary_mass_A"].get<double>() << "  B "
      << report["boundary_mass_B"].get<double>() << '\n'
      << "quadrant mass   x+y+ " << fixed(quadrants[0], 4) << "  x+y- " << fixed(quadrants[1], 4) << "  x-y+ "
      << fixed(quadrants[2], 4) << "  x-y- " << fixed(quadrants[3], 4) << '\n'
      << "state written to " << (config.output_dir / "state.bin").string() << '\n';
}

void cmd_search(const RunConfig& config, std::ostream& log) {
  config.validate();
  if (settings_combinations(config.time_candidates).empty()) {
    throw InvalidArgument("time candidates admit no non-degenerate settings (need two distinct times)");
  }
  SearchOptions options = config.search;
  options.seed = config.seed;
  const auto report = scan_settings(config.grid_x, config.grid_y, config.time_candidates, config.physics, options,
                                    config.threads);
  prepare_output(config);
  write_json(config.output_dir / "scan.json", to_json(report));
  save_state(config.output_dir / "best_state.bin", report.best.state);

  const auto& best = report.entries.front();
  log << "combinations    " << report.entries.size() << '\n'
      << "best eigenvalue " << fixed(best.eigenvalue, 8) << "  (2 sqrt 2 = " << fixed(2.0 * std::sqrt(2.0), 8)
      << ")\n"
      << "best settings   alice " << best.settings.alice_times[0] << ", " << best.settings.alice_times[1]
      << "  bob " << best.settings.bob_times[0] << ", " << best.settings.bob_times[1] << '\n'
      << "residual        " << best.residual << " after " << best.iterations << " iterations\n";
}

void cmd_run(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto psi = initial_state(config);
  check_boundary_mass(psi);
  prepare_output(config);

  std::vector<CorrelationTable> tables;
  const bool all = config.estimator == "all";
  if (all || config.estimator == "quantum") tables.push_back(run_quantum(psi, config.settings, config.physics));
  if (all || config.estimator == "naive") {
    tables.push_back(run_naive_trajectories(psi, config.settings, config.physics, config.samples, config.seed,
                                            config.integrator));
  }
  if (all || config.estimator == "collapse") {
    CollapseOptions options;
    options.threads = config.threads;
    tables.push_back(run_collapse(psi, config.settings, config.physics, config.samples, config.seed,
                                  config.integrator, options));
  }

  json results = {{"settings", bohmchsh::to_json(config.settings)}, {"tables", json::array()}};
  for (const auto& t : tables) results["tables"].push_back(bohmchsh::to_json(t));
  write_json(config.output_dir / "results.json", results);
  write_file(config.output_dir / "tables.csv", [&](std::ostream& out) {
    for (std::size_t i = 0; i < tables.size(); ++i) write_table_csv(out, tables[i], config.settings, i == 0);
  });

  log << "estimator   E11        E12        E21        E22        S          stderr_S\n";
  for (const auto& t : tables) {
    const auto s = chsh_value(t);
    char line[160];
    std::snprintf(line, sizeof line, "%-10s % .6f % .6f % .6f % .6f  %.6f   %.6f\n", t.estimator.c_str(),
                  t.correlation[0][0], t.correlation[0][1], t.correlation[1][0], t.correlation[1][1], s.s,
                  s.std_error);
    log << line;
  }
}

void cmd_equivariance(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto psi = initial_state(config);
  check_boundary_mass(psi);
  double time = 0.0;
  if (config.equivariance_time) {
    time = *config.equivariance_time;
  } else {
    const double width = config.terms.empty() ? 1.0 : config.terms.front().packet_a.width;
    time = width_doubling_time(width, config.physics.mass_a, config.physics.hbar);
  }
  const auto report =
      check_equivariance(psi, config.physics, time, config.equivariance_samples, config.seed, config.integrator);
  prepare_output(config);
  const auto& d = report.diagnostics;
  write_json(config.output_dir / "equivariance.json",
             {{"time", report.time},
              {"requested", config.equivariance_samples},
              {"samples", report.samples},
              {"ks_A", report.ks_a},
              {"ks_B", report.ks_b},
              {"tv_16x16", report.tv},
              {"diagnostics",
               {{"accepted_steps", d.accepted_steps},
                {"rejected_steps", d.rejected_steps},
                {"trajectory_failures", d.failures},
                {"node_floor_events", d.field.floor_events},
                {"speed_clamp_events", d.field.clamp_events}}}});
  write_file(config.output_dir / "histogram_A.csv",
             [&](std::ostream& out) { write_marginal_histogram_csv(out, report, Axis::a); });
  write_file(config.output_dir / "histogram_B.csv",
             [&](std::ostream& out) { write_marginal_histogram_csv(out, report, Axis::b); });

  log << "time            " << fixed(report.time, 6) << '\n'
      << "trajectories    " << report.samples << " of " << config.equivariance_samples << '\n'
      << "KS distance     A " << fixed(report.ks_a, 5) << "  B " << fixed(report.ks_b, 5) << '\n'
      << "TV (16x16)      " << fixed(report.tv, 5) << '\n';
  const double failed = static_cast<double>(config.equivariance_samples - report.samples);
  if (failed > kMaxFailureFraction * static_cast<double>(config.equivariance_samples)) {
    throw TrajectoryFailureError("equivariance: " + std::to_string(static_cast<std::size_t>(failed)) +
                                 " trajectories failed");
  }
}

}  // namespace bohmchsh::cli
