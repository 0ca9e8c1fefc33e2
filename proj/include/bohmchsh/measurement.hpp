#pragma once

#include "bohmchsh/wavefunction.hpp"

namespace bohmchsh {

/// Dichotomic observable sign(Q_axis(time) - threshold).
struct SignObservable {
  Axis axis = Axis::a;
  double time = 0.0;
  double threshold = 0.0;

  void validate() const;
};

/// +1 if position >= threshold, else -1.
inline int outcome_sign(double position, double threshold) { return position >= threshold ? 1 : -1; }

/// Born probability of +1 on the current state (no evolution).
double half_plane_probability(const WaveFunction2D& psi, Axis axis, double threshold);

/// p(+1) for `obs` on psi given at time 0: evolves the observable's axis first.
double outcome_probability(const WaveFunction2D& psi, const SignObservable& obs, const PhysicalParams& params);

struct Collapsed {
  WaveFunction2D state;
  /// Pre-collapse probability of the recorded outcome.
  double probability = 0.0;
};

/// Projects psi (already at the measurement instant) onto the half-plane of
/// `outcome` on obs.axis and renormalizes. Throws ZeroProbabilityError if
/// that outcome has probability <= 1e-12.
Collapsed collapse(const WaveFunction2D& psi, const SignObservable& obs, int outcome);

inline constexpr double kMinBranchProbability = 1e-12;

/// <A(t_A) B(t_B)> for sign observables on different particles, psi0 at time 0.
double quantum_two_time_correlation(const WaveFunction2D& psi0, const SignObservable& obs_a,
                                    const SignObservable& obs_b, const PhysicalParams& params);

}  // namespace bohmchsh
