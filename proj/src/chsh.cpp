#include "bohmchsh/chsh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "bohmchsh/errors.hpp"
#include "bohmchsh/parallel.hpp"
#include "bohmchsh/propagator.hpp"

namespace bohmchsh {

double ExperimentSettings::max_time() const {
  return std::max({alice_times[0], alice_times[1], bob_times[0], bob_times[1]});
}

void ExperimentSettings::validate() const {
  for (double t : {alice_times[0], alice_times[1], bob_times[0], bob_times[1]}) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("measurement times must be finite and >= 0");
  }
  if (!std::isfinite(alice_threshold) || !std::isfinite(bob_threshold)) {
    throw InvalidArgument("thresholds must be finite");
  }
}

ChshValue chsh_value(const CorrelationTable& table) {
  const auto& e = table.correlation;
  const auto& se = table.std_error;
  ChshValue v;
  v.s = std::abs(e[0][0] + e[0][1] + e[1][0] - e[1][1]);
  v.std_error = std::sqrt(se[0][0] * se[0][0] + se[0][1] * se[0][1] + se[1][0] * se[1][0] + se[1][1] * se[1][1]);
  return v;
}

double signalling_score(const CorrelationTable& table, Axis side) {
  double worst = 0.0;
  for (int own = 0; own < 2; ++own) {
    // Fix this side's setting, vary the other party's choice.
    auto cell = [&](int choice) -> std::pair<double, std::size_t> {
      if (side == Axis::a) return {table.marginal_a[own][choice], table.samples[own][choice]};
      return {table.marginal_b[choice][own], table.samples[choice][own]};
    };
    const auto [p1, n1] = cell(0);
    const auto [p2, n2] = cell(1);
    const double diff = std::abs(p1 - p2);
    if (n1 == 0 || n2 == 0) {
      worst = std::max(worst, diff);
      continue;
    }
    const double pooled = std::sqrt(p1 * (1.0 - p1) / static_cast<double>(n1) + p2 * (1.0 - p2) / static_cast<double>(n2));
    if (pooled > 0.0) {
      worst = std::max(worst, diff / pooled);
    } else if (diff > 0.0) {
      worst = std::numeric_limits<double>::infinity();
    }
  }
  return worst;
}

CorrelationTable run_quantum(const WaveFunction2D& psi0, const ExperimentSettings& settings,
                             const PhysicalParams& params) {
  settings.validate();
  CorrelationTable table;
  table.estimator = "quantum";
  std::array<double, 2> pa{};
  std::array<double, 2> pb{};
  for (int i = 0; i < 2; ++i) {
    pa[i] = outcome_probability(psi0, settings.alice(i), params);
    pb[i] = outcome_probability(psi0, settings.bob(i), params);
  }
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      table.correlation[a][b] = quantum_two_time_correlation(psi0, settings.alice(a), settings.bob(b), params);
      table.marginal_a[a][b] = pa[a];
      table.marginal_b[a][b] = pb[b];
    }
  }
  return table;
}

namespace {

// Running tallies for one (a, b) cell.
struct CellTally {
  double product_sum = 0.0;
  std::size_t alice_plus = 0;
  std::size_t bob_plus = 0;
  std::size_t n = 0;

  void add(int alice, int bob) {
    product_sum += alice * bob;
    alice_plus += alice > 0;
    bob_plus += bob > 0;
    ++n;
  }
};

void store(CorrelationTable& table, int a, int b, const CellTally& tally) {
  const double n = static_cast<double>(tally.n);
  const double mean = tally.n ? tally.product_sum / n : 0.0;
  // Products are +-1, so the sample variance is n/(n-1) (1 - mean^2).
  const double variance = tally.n > 1 ? std::max(0.0, 1.0 - mean * mean) * n / (n - 1.0) : 0.0;
  table.correlation[a][b] = mean;
  table.std_error[a][b] = tally.n ? std::sqrt(variance / n) : 0.0;
  table.marginal_a[a][b] = tally.n ? static_cast<double>(tally.alice_plus) / n : 0.0;
  table.marginal_b[a][b] = tally.n ? static_cast<double>(tally.bob_plus) / n : 0.0;
  table.samples[a][b] = tally.n;
}

void check_failures(std::uint64_t failures, std::size_t n, const char* what) {
  if (static_cast<double>(failures) > kMaxFailureFraction * static_cast<double>(n)) {
    throw TrajectoryFailureError(std::string(what) + ": " + std::to_string(failures) + " of " + std::to_string(n) +
                                 " trajectories failed");
  }
}

constexpr std::uint64_t kNaiveStream = 0x6e61697665ULL;
constexpr std::uint64_t kCollapseStream = 0x636f6c6cULL;

}  // namespace

CorrelationTable run_naive_trajectories(const WaveFunction2D& psi0, const ExperimentSettings& settings,
                                        const PhysicalParams& params, std::size_t n, std::uint64_t seed,
                                        const IntegratorConfig& config) {
  settings.validate();
  if (n == 0) throw InvalidArgument("ensemble size must be positive");

  std::vector<double> stops{0.0, settings.alice_times[0], settings.alice_times[1], settings.bob_times[0],
                            settings.bob_times[1]};
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
  auto stop_index = [&](double t) {
    return static_cast<std::size_t>(std::lower_bound(stops.begin(), stops.end(), t) - stops.begin());
  };

  const auto starts = sample_positions(psi0, n, derive_seed(seed, kNaiveStream));
  GuidanceField field(psi0, 0.0, params, config);
  const auto run = integrate_ensemble(field, starts, 0.0, stops, config);
  check_failures(run.stats.failures, n, "naive trajectories");

  CorrelationTable table;
  table.estimator = "naive";
  table.diagnostics = run.stats;
  for (int a = 0; a < 2; ++a) {
    const auto& qa = run.positions[stop_index(settings.alice_times[a])];
    for (int b = 0; b < 2; ++b) {
      const auto& qb = run.positions[stop_index(settings.bob_times[b])];
      CellTally tally;
      for (std::size_t i = 0; i < n; ++i) {
        if (!run.ok(i)) continue;
        tally.add(outcome_sign(qa[i].x, settings.alice_threshold), outcome_sign(qb[i].y, settings.bob_threshold));
      }
      store(table, a, b, tally);
    }
  }
  return table;
}

namespace {

struct CellResult {
  CellTally tally;
  IntegratorStats stats;
};

CellResult run_collapse_cell(const WaveFunction2D& psi0, const SignObservable& alice, const SignObservable& bob,
                             const PhysicalParams& params, std::size_t n, std::uint64_t seed,
                             const IntegratorConfig& config, TieOrder tie_order) {
  const bool alice_first = alice.time < bob.time || (alice.time == bob.time && tie_order == TieOrder::alice_first);
  const SignObservable& first = alice_first ? alice : bob;
  const SignObservable& second = alice_first ? bob : alice;
  const Axis second_axis = second.axis;
  auto coordinate = [](Point q, Axis axis) { return axis == Axis::a ? q.x : q.y; };

  CellResult result;
  auto positions = sample_positions(psi0, n, seed);
  std::vector<bool> ok(n, true);

  if (first.time > 0.0) {
    GuidanceField field(psi0, 0.0, params, config);
    const double stop[] = {first.time};
    auto run = integrate_ensemble(field, positions, 0.0, stop, config);
    result.stats += run.stats;
    for (std::size_t i = 0; i < n; ++i) {
      ok[i] = run.ok(i);
      positions[i] = run.positions[0][i];
    }
  }

  std::vector<int> first_outcome(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) first_outcome[i] = outcome_sign(coordinate(positions[i], first.axis), first.threshold);
  }

  const auto at_first = free_evolve(psi0, first.time, first.time, params);
  const Clocks remaining = second_axis == Axis::a ? Clocks::a_only : Clocks::b_only;
  for (int outcome : {1, -1}) {
    std::vector<std::size_t> members;
    std::vector<Point> branch_start;
    for (std::size_t i = 0; i < n; ++i) {
      if (ok[i] && first_outcome[i] == outcome) {
        members.push_back(i);
        branch_start.push_back(positions[i]);
      }
    }
    if (members.empty()) continue;
    // A registered outcome of vanishing probability means the ensemble is
    // not |psi|^2-distributed; collapse() aborts the run.
    auto branch = collapse(at_first, first, outcome);
    if (second.time > first.time) {
      GuidanceField field(std::move(branch.state), first.time, params, config, remaining);
      const double stop[] = {second.time};
      auto run = integrate_ensemble(field, branch_start, first.time, stop, config);
      result.stats += run.stats;
      for (std::size_t m = 0; m < members.size(); ++m) {
        ok[members[m]] = run.ok(m);
        positions[members[m]] = run.positions[0][m];
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) continue;
    const int second_outcome = outcome_sign(coordinate(positions[i], second.axis), second.threshold);
    const int a = alice_first ? first_outcome[i] : second_outcome;
    const int b = alice_first ? second_outcome : first_outcome[i];
    result.tally.add(a, b);
  }
  result.stats.failures = n - result.tally.n;
  return result;
}

}  // namespace

CorrelationTable run_collapse(const WaveFunction2D& psi0, const ExperimentSettings& settings,
                              const PhysicalParams& params, std::size_t n, std::uint64_t seed,
                              const IntegratorConfig& config, const CollapseOptions& options) {
  settings.validate();
  if (n == 0) throw InvalidArgument("ensemble size must be positive");

  std::array<CellResult, 4> cells;
  parallel_for(4, options.threads, [&](std::size_t c) {
    const int a = static_cast<int>(c / 2);
    const int b = static_cast<int>(c % 2);
    cells[c] = run_collapse_cell(psi0, settings.alice(a), settings.bob(b), params, n,
                                 derive_seed(seed, kCollapseStream, c), config, options.tie_order);
  });

  CorrelationTable table;
  table.estimator = "collapse";
  for (std::size_t c = 0; c < 4; ++c) {
    check_failures(cells[c].stats.failures, n, "collapse trajectories");
    table.diagnostics += cells[c].stats;
    store(table, static_cast<int>(c / 2), static_cast<int>(c % 2), cells[c].tally);
  }
  return table;
}

nlohmann::json to_json(const ExperimentSettings& settings) {
  return {{"alice_times", settings.alice_times},
          {"bob_times", settings.bob_times},
          {"alice_threshold", settings.alice_threshold},
          {"bob_threshold", settings.bob_threshold}};
}

ExperimentSettings settings_from_json(const nlohmann::json& j) {
  ExperimentSettings s;
  s.alice_times = j.value("alice_times", s.alice_times);
  s.bob_times = j.value("bob_times", s.bob_times);
  s.alice_threshold = j.value("alice_threshold", s.alice_threshold);
  s.bob_threshold = j.value("bob_threshold", s.bob_threshold);
  s.validate();
  return s;
}

nlohmann::json to_json(const CorrelationTable& table) {
  const auto chsh = chsh_value(table);
  nlohmann::json cells = nlohmann::json::array();
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      cells.push_back({{"a", a + 1},
                       {"b", b + 1},
                       {"E", table.correlation[a][b]},
                       {"stderr", table.std_error[a][b]},
                       {"p_A_plus", table.marginal_a[a][b]},
                       {"p_B_plus", table.marginal_b[a][b]},
                       {"n", table.samples[a][b]}});
    }
  }
  const auto& d = table.diagnostics;
  return {{"estimator", table.estimator},
          {"cells", cells},
          {"S", chsh.s},
          {"stderr_S", chsh.std_error},
          {"diagnostics",
           {{"accepted_steps", d.accepted_steps},
            {"rejected_steps", d.rejected_steps},
            {"fields_computed", d.fields_computed},
            {"trajectory_failures", d.failures},
            {"velocity_evaluations", d.field.evaluations},
            {"node_floor_events", d.field.floor_events},
            {"speed_clamp_events", d.field.clamp_events}}}};
}

void write_table_csv(std::ostream& out, const CorrelationTable& table, const ExperimentSettings& settings,
                     bool header) {
  if (header) out << "estimator,a,b,t_a,t_b,E,stderr,p_A_plus,p_B_plus,n\n";
  const auto precision = out.precision(17);
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      out << table.estimator << ',' << a + 1 << ',' << b + 1 << ',' << settings.alice_times[a] << ','
          << settings.bob_times[b] << ',' << table.correlation[a][b] << ',' << table.std_error[a][b] << ','
          << table.marginal_a[a][b] << ',' << table.marginal_b[a][b] << ',' << table.samples[a][b] << '\n';
    }
  }
  out.precision(precision);
}

}  // namespace bohmchsh
