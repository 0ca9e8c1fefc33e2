#include "bohmchsh/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "bohmchsh/errors.hpp"
#include "bohmchsh/propagator.hpp"

namespace bohmchsh {

double ks_distance(std::span<const double> samples, const Grid1D& grid, std::span<const double> cell_mass) {
  if (samples.empty()) throw InvalidArgument("KS distance needs samples");
  if (cell_mass.size() != grid.n) throw InvalidArgument("cell mass does not match the grid");
  std::vector<double> cumulative(grid.n + 1, 0.0);
  for (std::size_t j = 0; j < grid.n; ++j) cumulative[j + 1] = cumulative[j] + cell_mass[j];
  const double total = cumulative.back();

  auto cdf = [&](double x) {
    const double s = (x - grid.lower_edge()) / grid.dx;
    if (s <= 0.0) return 0.0;
    if (s >= static_cast<double>(grid.n)) return 1.0;
    const auto j = static_cast<std::size_t>(s);
    const double f = s - static_cast<double>(j);
    return (cumulative[j] + f * cell_mass[j]) / total;
  };

  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    worst = std::max({worst, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return worst;
}

double binned_tv_distance(std::span<const Point> samples, const WaveFunction2D& psi, std::size_t bins_per_axis) {
  if (samples.empty()) throw InvalidArgument("TV distance needs samples");
  if (bins_per_axis == 0 || psi.nx() % bins_per_axis != 0 || psi.ny() % bins_per_axis != 0) {
    throw InvalidArgument("macro-cell count must divide the grid size");
  }
  const std::size_t wx = psi.nx() / bins_per_axis;
  const std::size_t wy = psi.ny() / bins_per_axis;
  std::vector<double> exact(bins_per_axis * bins_per_axis, 0.0);
  const auto p = cell_probabilities(psi);
  double total = 0.0;
  for (std::size_t ix = 0; ix < psi.nx(); ++ix) {
    for (std::size_t iy = 0; iy < psi.ny(); ++iy) {
      exact[(ix / wx) * bins_per_axis + iy / wy] += p[ix * psi.ny() + iy];
      total += p[ix * psi.ny() + iy];
    }
  }
  std::vector<double> empirical(exact.size(), 0.0);
  auto cell = [](double u, const Grid1D& g) {
    const auto j = static_cast<std::ptrdiff_t>(std::floor((u - g.lower_edge()) / g.dx));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(g.n) - 1));
  };
  for (const auto& q : samples) {
    empirical[(cell(q.x, psi.grid_x()) / wx) * bins_per_axis + cell(q.y, psi.grid_y()) / wy] += 1.0;
  }
  double tv = 0.0;
  const double n = static_cast<double>(samples.size());
  for (std::size_t b = 0; b < exact.size(); ++b) tv += std::abs(empirical[b] / n - exact[b] / total);
  return 0.5 * tv;
}

double free_gaussian_width(double sigma0, double t, double mass, double hbar) {
  const double r = hbar * t / (2.0 * mass * sigma0 * sigma0);
  return sigma0 * std::sqrt(1.0 + r * r);
}

double width_doubling_time(double sigma0, double mass, double hbar) {
  return 2.0 * std::sqrt(3.0) * mass * sigma0 * sigma0 / hbar;
}

EquivarianceReport check_equivariance(const WaveFunction2D& psi0, const PhysicalParams& params, double time,
                                      std::size_t n, std::uint64_t seed, const IntegratorConfig& config) {
  if (n == 0) throw InvalidArgument("equivariance check needs at least one trajectory");
  if (!(time >= 0.0)) throw InvalidArgument("equivariance time must be >= 0");
  EquivarianceReport report;
  report.time = time;
  const auto starts = sample_positions(psi0, n, seed);
  report.evolved = free_evolve(psi0, time, time, params);
  if (time > 0.0) {
    GuidanceField field(psi0, 0.0, params, config);
    const double stop[] = {time};
    auto run = integrate_ensemble(field, starts, 0.0, stop, config);
    report.diagnostics = run.stats;
    for (std::size_t i = 0; i < n; ++i) {
      if (run.ok(i)) report.final_points.push_back(run.positions[0][i]);
    }
  } else {
    report.final_points = starts;
  }
  report.samples = report.final_points.size();
  if (report.final_points.empty()) throw NumericalError("every equivariance trajectory failed");

  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& q : report.final_points) {
    xs.push_back(q.x);
    ys.push_back(q.y);
  }
  report.ks_a = ks_distance(xs, report.evolved.grid_x(), marginal(report.evolved, Axis::a));
  report.ks_b = ks_distance(ys, report.evolved.grid_y(), marginal(report.evolved, Axis::b));
  report.tv = binned_tv_distance(report.final_points, report.evolved);
  return report;
}

void write_marginal_histogram_csv(std::ostream& out, const EquivarianceReport& report, Axis axis) {
  const Grid1D& grid = report.evolved.grid(axis);
  const auto exact = marginal(report.evolved, axis);
  std::vector<double> counts(grid.n, 0.0);
  for (const auto& q : report.final_points) {
    const double u = axis == Axis::a ? q.x : q.y;
    const auto j = static_cast<std::ptrdiff_t>(std::floor((u - grid.lower_edge()) / grid.dx));
    if (j >= 0 && j < static_cast<std::ptrdiff_t>(grid.n)) counts[static_cast<std::size_t>(j)] += 1.0;
  }
  out << "x,empirical_density,exact_density\n";
  const auto precision = out.precision(17);
  const double n = static_cast<double>(report.final_points.size());
  for (std::size_t j = 0; j < grid.n; ++j) {
    out << grid.point(j) << ',' << counts[j] / (n * grid.dx) << ',' << exact[j] / grid.dx << '\n';
  }
  out.precision(precision);
}

}  // namespace bohmchsh
