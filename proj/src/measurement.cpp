#include "bohmchsh/measurement.hpp"

#include <algorithm>
#include <cmath>

#include "bohmchsh/errors.hpp"
#include "bohmchsh/propagator.hpp"

namespace bohmchsh {

void SignObservable::validate() const {
  if (!(time >= 0.0) || !std::isfinite(threshold)) {
    throw InvalidArgument("sign observable needs time >= 0 and a finite threshold");
  }
}

double half_plane_probability(const WaveFunction2D& psi, Axis axis, double threshold) {
  const auto m = marginal(psi, axis);
  const Grid1D& grid = psi.grid(axis);
  double plus = 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < m.size(); ++j) {
    total += m[j];
    if (outcome_sign(grid.point(j), threshold) > 0) plus += m[j];
  }
  return total > 0.0 ? std::clamp(plus / total, 0.0, 1.0) : 0.0;
}

double outcome_probability(const WaveFunction2D& psi, const SignObservable& obs, const PhysicalParams& params) {
  obs.validate();
  const auto evolved = free_evolve(psi, obs.axis == Axis::a ? obs.time : 0.0, obs.axis == Axis::b ? obs.time : 0.0,
                                   params);
  return half_plane_probability(evolved, obs.axis, obs.threshold);
}

Collapsed collapse(const WaveFunction2D& psi, const SignObservable& obs, int outcome) {
  if (outcome != 1 && outcome != -1) throw InvalidArgument("outcome must be +1 or -1");
  const double total = norm_squared(psi);
  if (!(total > 0.0)) throw ZeroNormError("cannot collapse a zero wave function");

  WaveFunction2D projected = psi;
  const Grid1D& grid = psi.grid(obs.axis);
  for (std::size_t ix = 0; ix < psi.nx(); ++ix) {
    for (std::size_t iy = 0; iy < psi.ny(); ++iy) {
      const std::size_t j = obs.axis == Axis::a ? ix : iy;
      if (outcome_sign(grid.point(j), obs.threshold) != outcome) projected(ix, iy) = 0.0;
    }
  }
  const double probability = norm_squared(projected) / total;
  if (!(probability > kMinBranchProbability)) {
    throw ZeroProbabilityError("collapse onto an outcome of probability " + std::to_string(probability));
  }
  return {normalize(std::move(projected)), probability};
}

double quantum_two_time_correlation(const WaveFunction2D& psi0, const SignObservable& obs_a,
                                    const SignObservable& obs_b, const PhysicalParams& params) {
  if (obs_a.axis != Axis::a || obs_b.axis != Axis::b) {
    throw InvalidArgument("two-time correlation needs one observable per particle (A, B)");
  }
  obs_a.validate();
  obs_b.validate();
  const auto evolved = free_evolve(psi0, obs_a.time, obs_b.time, params);
  const auto& gx = evolved.grid_x();
  const auto& gy = evolved.grid_y();
  std::vector<int> sign_y(gy.n);
  for (std::size_t iy = 0; iy < gy.n; ++iy) sign_y[iy] = outcome_sign(gy.point(iy), obs_b.threshold);
  double sum = 0.0;
  double total = 0.0;
  for (std::size_t ix = 0; ix < gx.n; ++ix) {
    const int sx = outcome_sign(gx.point(ix), obs_a.threshold);
    for (std::size_t iy = 0; iy < gy.n; ++iy) {
      const double p = std::norm(evolved(ix, iy));
      total += p;
      sum += sx * sign_y[iy] * p;
    }
  }
  if (!(total > 0.0)) throw ZeroNormError("correlation of a zero wave function");
  return std::clamp(sum / total, -1.0, 1.0);
}

}  // namespace bohmchsh
