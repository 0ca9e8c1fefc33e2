#include <cmath>
#include <numbers>

#include <doctest.h>

#include "bohmchsh/errors.hpp"
#include "bohmchsh/search.hpp"
#include "dense_oracle.hpp"
#include "support.hpp"

using namespace bohmchsh;
using support::default_grid;

namespace {

constexpr double kTsirelson = 2.0 * std::numbers::sqrt2;

ExperimentSettings violating_settings() {
  ExperimentSettings s;
  s.alice_times = {0.0, 2.0};
  s.bob_times = {0.0, 2.0};
  return s;
}

// The sign step makes states broadband and back-evolution wraps them around
// the torus; the operator identities below hold exactly on the periodic grid.
constexpr auto kTorus = BoundaryCheck::skip;

double rayleigh(const WaveFunction2D& psi, const ExperimentSettings& s, const PhysicalParams& p) {
  return std::real(inner_product(psi, apply_chsh_operator(psi, s, p, kTorus))) / norm_squared(psi);
}

}  // namespace

TEST_CASE("Heisenberg sign: time zero, involution, isometry, Born identity") {
  const auto g = default_grid();
  const PhysicalParams params{1.0, 1.0, 1.3};
  const auto psi = support::random_packet_state(g, g, 3);

  const auto at0 = apply_heisenberg_sign(psi, {Axis::a, 0.0, 0.0}, params, kTorus);
  WaveFunction2D direct = psi;
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j)
      if (g.point(i) < 0.0) direct(i, j) = -direct(i, j);
  CHECK(max_abs_difference(at0, direct) < 1e-14);

  for (const SignObservable obs : {SignObservable{Axis::a, 1.0, 0.0}, SignObservable{Axis::b, 2.0, 0.3125}}) {
    const auto once = apply_heisenberg_sign(psi, obs, params, kTorus);
    CHECK(max_abs_difference(apply_heisenberg_sign(once, obs, params, kTorus), psi) < 1e-10);
    CHECK(std::abs(norm_squared(once) - norm_squared(psi)) < 1e-10);
    const double expectation = std::real(inner_product(psi, once));
    CHECK(std::abs(expectation - (2.0 * outcome_probability(psi, obs, params) - 1.0)) < 1e-10);
  }
}

TEST_CASE("wrap-around of the broadband intermediate state is reported") {
  const auto g = default_grid();
  const auto psi = support::random_packet_state(g, g, 1);
  CHECK_THROWS_AS(apply_chsh_operator(psi, violating_settings(), {}), BoundaryMassError);
}

TEST_CASE("CHSH operator is self-adjoint") {
  const auto g = default_grid();
  const auto s = violating_settings();
  for (unsigned seed = 1; seed <= 3; ++seed) {
    const auto phi = support::random_packet_state(g, g, seed), psi = support::random_packet_state(g, g, seed + 100);
    const complex lhs = inner_product(phi, apply_chsh_operator(psi, s, {}, kTorus));
    const complex rhs = inner_product(apply_chsh_operator(phi, s, {}, kTorus), psi);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
  // Arbitrary grid vectors on the torus.
  const auto h = Grid1D::spanning(16, -4.0, 4.0);
  ExperimentSettings s2;
  s2.alice_times = {0.1, 0.4};
  s2.bob_times = {0.0, 0.3};
  const auto phi = support::random_state(h, h, 1), psi = support::random_state(h, h, 2);
  const complex lhs = inner_product(phi, apply_chsh_operator(psi, s2, {}, BoundaryCheck::skip));
  const complex rhs = inner_product(apply_chsh_operator(phi, s2, {}, BoundaryCheck::skip), psi);
  CHECK(std::abs(lhs - rhs) < 1e-10);
}

TEST_CASE("degenerate settings: C = 2 A1 B1 and top eigenvalue 2") {
  const auto g = default_grid();
  ExperimentSettings s;
  s.alice_times = {1.0, 1.0};
  s.bob_times = {0.5, 0.5};
  const auto psi = support::random_packet_state(g, g, 4);
  const auto ab = apply_heisenberg_sign(apply_heisenberg_sign(psi, s.alice(0), {}, kTorus), s.bob(0), {}, kTorus);
  CHECK(max_abs_difference(apply_chsh_operator(psi, s, {}, kTorus), 2.0 * ab) < 1e-12);

  const auto h = Grid1D::spanning(16, -4.0, 4.0);
  SearchOptions options;
  options.subspace.functions_per_axis = 0;
  const auto r = find_max_violation_state(h, h, s, {}, options);
  CHECK(r.eigenvalue == doctest::Approx(2.0).epsilon(options.tol));
}

TEST_CASE("Rayleigh quotients stay below the Tsirelson bound") {
  const auto g = default_grid();
  const auto s = violating_settings();
  for (unsigned seed = 1; seed <= 20; ++seed) {
    const auto psi = support::random_packet_state(g, g, seed, 1 + seed % 5);
    CHECK(std::abs(rayleigh(psi, s, {})) <= kTsirelson + 1e-8);
  }
}

TEST_CASE("Rayleigh quotient equals the signed quantum correlation sum") {
  const auto g = default_grid();
  ExperimentSettings s;
  s.alice_times = {0.5, 1.0};
  s.bob_times = {0.0, 2.0};
  s.alice_threshold = 0.3125;
  for (unsigned seed = 1; seed <= 3; ++seed) {
    const auto psi = support::random_packet_state(g, g, seed + 40);
    const auto q = run_quantum(psi, s, {});
    const double sum = q.correlation[0][0] + q.correlation[0][1] + q.correlation[1][0] - q.correlation[1][1];
    CHECK(std::abs(rayleigh(psi, s, {}) - sum) < 1e-8);
  }
}

TEST_CASE("power iteration matches a dense eigensolver on an 8x8 grid") {
  const auto g = Grid1D::spanning(8, -2.0, 2.0);
  const PhysicalParams params{1.0, 1.0, 0.8};
  ExperimentSettings s;
  s.alice_times = {0.0, 0.3};
  s.bob_times = {0.1, 0.5};

  const Eigen::MatrixXcd c = support::dense_chsh(g, g, s, params);
  CHECK((c - c.adjoint()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(c);
  const double dense_top = solver.eigenvalues().maxCoeff();

  // The matrix-free operator agrees with the dense one on a random vector.
  const auto v = support::random_state(g, g, 9);
  Eigen::VectorXcd ev(64);
  for (int i = 0; i < 64; ++i) ev(i) = v.amplitudes()[std::size_t(i)];
  const Eigen::VectorXcd dense_cv = c * ev;
  const auto cv = apply_chsh_operator(v, s, params, BoundaryCheck::skip);
  double diff = 0.0;
  for (int i = 0; i < 64; ++i) diff = std::max(diff, std::abs(dense_cv(i) - cv.amplitudes()[std::size_t(i)]));
  CHECK(diff < 1e-12);

  SearchOptions options;
  options.subspace.functions_per_axis = 0;
  options.max_iter = 200000;
  const auto r = find_max_violation_state(g, g, s, params, options);
  CHECK(std::abs(r.eigenvalue - dense_top) < 1e-8);
  CHECK(r.residual < options.tol);
}

TEST_CASE("default search finds a violating eigenstate consistent with run_quantum") {
  const auto g = default_grid();
  const auto s = violating_settings();
  SearchOptions options;
  options.subspace.functions_per_axis = 10;
  const auto r = find_max_violation_state(g, g, s, {}, options);
  CHECK(r.residual < options.tol);
  CHECK(r.eigenvalue > 2.0);
  CHECK(r.eigenvalue <= kTsirelson + 1e-6);
  CHECK(norm_squared(r.state) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chsh_value(run_quantum(r.state, s, {})).s == doctest::Approx(r.eigenvalue).epsilon(1e-6));
  // Eigenvector of C compressed to the Hermite product span: project C psi back.
  const auto h = hermite_basis(g, options.subspace.functions_per_axis, options.subspace.scale);
  const auto c_psi = apply_chsh_operator(r.state, s, {}, kTorus);
  WaveFunction2D projected(g, g);
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) {
      complex coef{};
      for (std::size_t x = 0; x < g.n; ++x)
        for (std::size_t y = 0; y < g.n; ++y) coef += std::conj(h[i][x] * h[j][y]) * c_psi(x, y);
      coef *= g.dx * g.dx;
      for (std::size_t x = 0; x < g.n; ++x)
        for (std::size_t y = 0; y < g.n; ++y) projected(x, y) += coef * h[i][x] * h[j][y];
    }
  const auto residual = projected - complex(r.eigenvalue) * r.state;
  CHECK(std::sqrt(norm_squared(residual)) < 1e-6);
  for (std::size_t i = 1; i < r.rayleigh_history.size(); ++i)
    CHECK(r.rayleigh_history[i] >= r.rayleigh_history[i - 1] - 1e-12);
}

TEST_CASE("search option errors") {
  const auto g = default_grid();
  SearchOptions options;
  options.subspace.functions_per_axis = 6;
  options.max_iter = 2;
  CHECK_THROWS_AS(find_max_violation_state(g, g, violating_settings(), {}, options), ConvergenceError);
  options = {};
  options.shift = 2.5;
  CHECK_THROWS_AS(find_max_violation_state(g, g, violating_settings(), {}, options), InvalidArgument);
  options = {};
  options.tol = 0.0;
  CHECK_THROWS_AS(find_max_violation_state(g, g, violating_settings(), {}, options), InvalidArgument);
}

TEST_CASE("Hermite basis is orthonormal on the grid") {
  const auto g = default_grid();
  const auto h = hermite_basis(g, 12, 1.0);
  REQUIRE(h.size() == 12);
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t j = 0; j < h.size(); ++j) {
      complex s{};
      for (std::size_t k = 0; k < g.n; ++k) s += std::conj(h[i][k]) * h[j][k];
      CHECK(std::abs(s * g.dx - (i == j ? 1.0 : 0.0)) < 1e-12);
    }
  // h_0 is the Gaussian of the requested |h_0|^2 width.
  double var = 0.0;
  for (std::size_t k = 0; k < g.n; ++k) var += std::norm(h[0][k]) * g.point(k) * g.point(k) * g.dx;
  CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(hermite_basis(g, 0, 1.0), InvalidArgument);
}

TEST_CASE("scan combinatorics and ordering") {
  const std::vector<double> one{1.0}, two{0.0, 1.0}, four{0.0, 0.5, 1.0, 2.0};
  CHECK(settings_combinations(one).empty());
  CHECK(settings_combinations(two).size() == 1);
  CHECK(settings_combinations(four).size() == 36);
  for (const auto& s : settings_combinations(four)) {
    CHECK(s.alice_times[0] < s.alice_times[1]);
    CHECK(s.bob_times[0] < s.bob_times[1]);
  }
  const auto g = default_grid();
  CHECK_THROWS_AS(scan_settings(g, g, one, {}), InvalidArgument);

  SearchOptions options;
  options.subspace.functions_per_axis = 6;
  const std::vector<double> three{0.0, 1.0, 2.0};
  const auto report = scan_settings(g, g, three, {}, options, 2);
  REQUIRE(report.entries.size() == 9);
  for (std::size_t i = 1; i < report.entries.size(); ++i)
    CHECK(report.entries[i - 1].eigenvalue >= report.entries[i].eigenvalue);
  CHECK(report.best.eigenvalue == report.entries.front().eigenvalue);
  const auto j = to_json(report);
  CHECK(j.at("combinations").size() == 9);
  const auto again = scan_settings(g, g, three, {}, options, 1);
  CHECK(to_json(again).dump() == j.dump());
}
