#include "bohmchsh/search.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "bohmchsh/errors.hpp"
#include "bohmchsh/parallel.hpp"

namespace bohmchsh {

WaveFunction2D apply_heisenberg_sign(const WaveFunction2D& psi, const SignObservable& obs, const PhysicalParams& params,
                                     BoundaryCheck check) {
  obs.validate();
  const double ta = obs.axis == Axis::a ? obs.time : 0.0;
  const double tb = obs.axis == Axis::b ? obs.time : 0.0;
  WaveFunction2D out = free_evolve(psi, ta, tb, params, check);
  const Grid1D& grid = out.grid(obs.axis);
  for (std::size_t ix = 0; ix < out.nx(); ++ix) {
    for (std::size_t iy = 0; iy < out.ny(); ++iy) {
      const std::size_t j = obs.axis == Axis::a ? ix : iy;
      if (outcome_sign(grid.point(j), obs.threshold) < 0) out(ix, iy) = -out(ix, iy);
    }
  }
  return free_evolve_inverse(out, ta, tb, params, check);
}

WaveFunction2D apply_chsh_operator(const WaveFunction2D& psi, const ExperimentSettings& settings,
                                   const PhysicalParams& params, BoundaryCheck check) {
  settings.validate();
  WaveFunction2D result(psi.grid_x(), psi.grid_y());
  for (int a = 0; a < 2; ++a) {
    const auto alice = apply_heisenberg_sign(psi, settings.alice(a), params, check);
    for (int b = 0; b < 2; ++b) {
      const double sign = (a == 1 && b == 1) ? -1.0 : 1.0;
      result += complex(sign) * apply_heisenberg_sign(alice, settings.bob(b), params, check);
    }
  }
  return result;
}

namespace {

using Matrix = Eigen::MatrixXcd;

Matrix to_matrix(const std::vector<std::vector<complex>>& columns, std::size_t rows) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (std::size_t r = 0; r < rows; ++r) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = columns[c][r];
  }
  return m;
}

// Matrix of <h_i| A(t) |h_k> for the sign observable on one axis.
Matrix compressed_sign(const Matrix& basis, const Grid1D& grid, double time, double threshold, double hbar,
                       double mass, Axis axis) {
  const auto n = static_cast<Eigen::Index>(grid.n);
  Matrix applied(n, basis.cols());
  for (Eigen::Index k = 0; k < basis.cols(); ++k) {
    std::vector<complex> column(basis.col(k).data(), basis.col(k).data() + n);
    auto evolved = free_evolve_1d(column, grid, time, hbar, mass);
    double edge = 0.0;
    for (std::size_t j : {std::size_t{0}, std::size_t{1}, grid.n - 2, grid.n - 1}) edge += std::norm(evolved[j]);
    if (!(edge * grid.dx < kBoundaryMassLimit)) throw BoundaryMassError(axis, edge * grid.dx);
    for (std::size_t j = 0; j < grid.n; ++j) {
      if (outcome_sign(grid.point(j), threshold) < 0) evolved[j] = -evolved[j];
    }
    auto back = free_evolve_1d(evolved, grid, -time, hbar, mass);
    for (Eigen::Index j = 0; j < n; ++j) applied(j, k) = back[static_cast<std::size_t>(j)];
  }
  Matrix m = basis.adjoint() * applied * grid.dx;
  // Exactly Hermitian; the discrete operator is, roundoff aside.
  return 0.5 * (m + m.adjoint()).eval();
}

struct Iterated {
  EigenResult result;
  std::vector<complex> vector;
};

template <class Apply>
Iterated power_iterate(Apply&& apply, std::vector<complex> v, double weight, const SearchOptions& options) {
  auto norm = [weight](const std::vector<complex>& x) {
    double s = 0.0;
    for (const auto& c : x) s += std::norm(c);
    return std::sqrt(s * weight);
  };
  auto scale = [](std::vector<complex>& x, double f) {
    for (auto& c : x) c *= f;
  };
  scale(v, 1.0 / norm(v));

  EigenResult result;
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
    std::vector<complex> w = apply(v);
    complex rq{};
    for (std::size_t i = 0; i < v.size(); ++i) rq += std::conj(v[i]) * w[i];
    const double lambda = std::real(rq) * weight;
    double r2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) r2 += std::norm(w[i] - lambda * v[i]);
    residual = std::sqrt(r2 * weight);
    result.rayleigh_history.push_back(lambda);
    result.eigenvalue = lambda;
    result.residual = residual;
    result.iterations = iter;
    if (residual < options.tol) return {std::move(result), std::move(v)};
    for (std::size_t i = 0; i < v.size(); ++i) w[i] += options.shift * v[i];
    scale(w, 1.0 / norm(w));
    v = std::move(w);
  }
  throw ConvergenceError("power iteration did not converge in " + std::to_string(options.max_iter) +
                             " iterations (residual " + std::to_string(residual) + ")",
                         residual);
}

std::vector<complex> random_vector(std::size_t size, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal;
  std::vector<complex> v(size);
  for (auto& c : v) {
    const double re = normal(engine);
    c = complex(re, normal(engine));
  }
  return v;
}

}  // namespace

std::vector<std::vector<complex>> hermite_basis(const Grid1D& grid, std::size_t count, double scale) {
  if (count == 0 || count > grid.n) throw InvalidArgument("Hermite basis size must be in [1, n]");
  if (!(scale > 0.0)) throw InvalidArgument("Hermite basis scale must be positive");
  // Oscillator length l = sqrt(2) * scale makes |h_0|^2 a Gaussian of std `scale`.
  const double length = std::numbers::sqrt2 * scale;
  Matrix m(static_cast<Eigen::Index>(grid.n), static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < grid.n; ++j) {
    const double xi = grid.point(j) / length;
    double prev = 0.0;
    double cur = std::pow(std::numbers::pi, -0.25) / std::sqrt(length) * std::exp(-0.5 * xi * xi);
    for (std::size_t k = 0; k < count; ++k) {
      m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = cur;
      const double kd = static_cast<double>(k);
      const double next = std::sqrt(2.0 / (kd + 1.0)) * xi * cur - std::sqrt(kd / (kd + 1.0)) * prev;
      prev = cur;
      cur = next;
    }
  }
  // Two passes of modified Gram-Schmidt in the dx-weighted inner product.
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      for (Eigen::Index i = 0; i < k; ++i) m.col(k) -= (m.col(i).dot(m.col(k)) * grid.dx) * m.col(i);
      m.col(k) /= std::sqrt(m.col(k).squaredNorm() * grid.dx);
    }
  }
  std::vector<std::vector<complex>> columns(count);
  for (std::size_t k = 0; k < count; ++k) {
    columns[k].assign(m.col(static_cast<Eigen::Index>(k)).data(),
                      m.col(static_cast<Eigen::Index>(k)).data() + grid.n);
  }
  return columns;
}

EigenResult find_max_violation_state(const Grid1D& grid_x, const Grid1D& grid_y, const ExperimentSettings& settings,
                                     const PhysicalParams& params, const SearchOptions& options) {
  grid_x.validate();
  grid_y.validate();
  params.validate();
  settings.validate();
  if (!(options.tol > 0.0)) throw InvalidArgument("search tolerance must be positive");
  if (!(options.shift > 2.0 * std::numbers::sqrt2)) throw InvalidArgument("shift must exceed 2*sqrt(2)");

  if (options.subspace.full_grid()) {
    const WaveFunction2D shape(grid_x, grid_y);
    const double weight = shape.cell_area();
    auto apply = [&](const std::vector<complex>& v) {
      WaveFunction2D psi(grid_x, grid_y, v);
      auto out = apply_chsh_operator(psi, settings, params, BoundaryCheck::skip);
      return std::vector<complex>(out.amplitudes().begin(), out.amplitudes().end());
    };
    auto [result, vector] = power_iterate(apply, random_vector(shape.size(), options.seed), weight, options);
    result.state = normalize(WaveFunction2D(grid_x, grid_y, std::move(vector)));
    return result;
  }

  const std::size_t m = options.subspace.functions_per_axis;
  const Matrix hx = to_matrix(hermite_basis(grid_x, m, options.subspace.scale), grid_x.n);
  const Matrix hy = to_matrix(hermite_basis(grid_y, m, options.subspace.scale), grid_y.n);
  std::array<Matrix, 2> alice;
  std::array<Matrix, 2> bob;
  for (int i = 0; i < 2; ++i) {
    alice[i] = compressed_sign(hx, grid_x, settings.alice_times[i], settings.alice_threshold, params.hbar,
                               params.mass_a, Axis::a);
    bob[i] = compressed_sign(hy, grid_y, settings.bob_times[i], settings.bob_threshold, params.hbar, params.mass_b,
                             Axis::b);
  }
  const auto dim = static_cast<Eigen::Index>(m);
  // Coefficients c(i, j) of h_i(x) h_j(y); (X (x) Y) c = X c Y^T.
  auto apply = [&](const std::vector<complex>& v) {
    Eigen::Map<const Matrix> c(v.data(), dim, dim);
    Matrix out = Matrix::Zero(dim, dim);
    for (int a = 0; a < 2; ++a) {
      const Matrix left = alice[a] * c;
      for (int b = 0; b < 2; ++b) {
        const double sign = (a == 1 && b == 1) ? -1.0 : 1.0;
        out.noalias() += sign * left * bob[b].transpose();
      }
    }
    return std::vector<complex>(out.data(), out.data() + out.size());
  };
  auto [result, vector] = power_iterate(apply, random_vector(m * m, options.seed), 1.0, options);
  const Eigen::Map<const Matrix> c(vector.data(), dim, dim);
  const Matrix grid_values = hx * c * hy.transpose();
  WaveFunction2D psi(grid_x, grid_y);
  for (std::size_t ix = 0; ix < grid_x.n; ++ix) {
    for (std::size_t iy = 0; iy < grid_y.n; ++iy) {
      psi(ix, iy) = grid_values(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(iy));
    }
  }
  result.state = normalize(std::move(psi));
  return result;
}

std::vector<ExperimentSettings> settings_combinations(std::span<const double> time_candidates,
                                                      const ExperimentSettings& thresholds) {
  std::vector<double> times(time_candidates.begin(), time_candidates.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<ExperimentSettings> combos;
  for (std::size_t a1 = 0; a1 < times.size(); ++a1) {
    for (std::size_t a2 = a1 + 1; a2 < times.size(); ++a2) {
      for (std::size_t b1 = 0; b1 < times.size(); ++b1) {
        for (std::size_t b2 = b1 + 1; b2 < times.size(); ++b2) {
          ExperimentSettings s = thresholds;
          s.alice_times = {times[a1], times[a2]};
          s.bob_times = {times[b1], times[b2]};
          combos.push_back(s);
        }
      }
    }
  }
  return combos;
}

ScanReport scan_settings(const Grid1D& grid_x, const Grid1D& grid_y, std::span<const double> time_candidates,
                         const PhysicalParams& params, const SearchOptions& options, std::size_t threads) {
  if (time_candidates.empty()) throw InvalidArgument("scan needs at least one candidate time");
  const auto combos = settings_combinations(time_candidates);
  if (combos.empty()) throw InvalidArgument("candidate times admit no non-degenerate settings");

  std::vector<ScanEntry> entries(combos.size());
  std::vector<EigenResult> results(combos.size());
  parallel_for(combos.size(), threads, [&](std::size_t i) {
    ScanEntry& entry = entries[i];
    entry.settings = combos[i];
    SearchOptions local = options;
    local.seed = derive_seed(options.seed, i);
    try {
      results[i] = find_max_violation_state(grid_x, grid_y, combos[i], params, local);
      entry.converged = true;
      entry.eigenvalue = results[i].eigenvalue;
      entry.iterations = results[i].iterations;
      entry.residual = results[i].residual;
    } catch (const NumericalError& e) {
      entry.error = e.what();
      if (const auto* c = dynamic_cast<const ConvergenceError*>(&e)) entry.residual = c->residual();
    }
  });

  std::vector<std::size_t> order(combos.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    if (entries[l].converged != entries[r].converged) return entries[l].converged;
    return entries[l].eigenvalue > entries[r].eigenvalue;
  });
  if (!entries[order.front()].converged) {
    throw NumericalError("every settings combination failed; first error: " + entries[order.front()].error);
  }
  ScanReport report;
  report.best = std::move(results[order.front()]);
  for (std::size_t i : order) report.entries.push_back(std::move(entries[i]));
  return report;
}

nlohmann::json to_json(const ScanReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json j = {{"settings", to_json(e.settings)},
                        {"converged", e.converged},
                        {"eigenvalue", e.eigenvalue},
                        {"iterations", e.iterations},
                        {"residual", e.residual}};
    if (!e.error.empty()) j["error"] = e.error;
    entries.push_back(std::move(j));
  }
  return {{"best",
           {{"settings", to_json(report.entries.front().settings)},
            {"eigenvalue", report.best.eigenvalue},
            {"iterations", report.best.iterations},
            {"residual", report.best.residual}}},
          {"combinations", entries}};
}

}  // namespace bohmchsh
