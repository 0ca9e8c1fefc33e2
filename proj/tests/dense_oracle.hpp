#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "bohmchsh/chsh.hpp"

namespace support {

/// Dense U(-t) sign U(t) on one axis from an explicit unitary DFT matrix.
inline Eigen::MatrixXcd dense_sign(const bohmchsh::Grid1D& g, double t, double threshold, double hbar, double mass) {
  const auto n = static_cast<Eigen::Index>(g.n);
  Eigen::MatrixXcd f(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k)
      f(j, k) = std::polar(1.0 / std::sqrt(double(n)), -2.0 * std::numbers::pi * double(j * k) / double(n));
  Eigen::VectorXcd phase(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index m = j < n / 2 ? j : j - n;
    const double k = 2.0 * std::numbers::pi * double(m) / (double(n) * g.dx);
    phase(j) = std::polar(1.0, -hbar * k * k * t / (2.0 * mass));
  }
  const Eigen::MatrixXcd u = f.adjoint() * phase.asDiagonal() * f;
  Eigen::VectorXcd sign(n);
  for (Eigen::Index j = 0; j < n; ++j) sign(j) = g.point(std::size_t(j)) >= threshold ? 1.0 : -1.0;
  return u.adjoint() * sign.asDiagonal() * u;
}

inline Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Explicit CHSH matrix on grid_x (x) grid_y, row-major like WaveFunction2D.
inline Eigen::MatrixXcd dense_chsh(const bohmchsh::Grid1D& gx, const bohmchsh::Grid1D& gy,
                                   const bohmchsh::ExperimentSettings& s, const bohmchsh::PhysicalParams& p) {
  const Eigen::MatrixXcd ix = Eigen::MatrixXcd::Identity(Eigen::Index(gx.n), Eigen::Index(gx.n));
  const Eigen::MatrixXcd iy = Eigen::MatrixXcd::Identity(Eigen::Index(gy.n), Eigen::Index(gy.n));
  Eigen::MatrixXcd a[2], b[2];
  for (int k = 0; k < 2; ++k) {
    a[k] = kron(dense_sign(gx, s.alice_times[k], s.alice_threshold, p.hbar, p.mass_a), iy);
    b[k] = kron(ix, dense_sign(gy, s.bob_times[k], s.bob_threshold, p.hbar, p.mass_b));
  }
  return a[0] * b[0] + a[0] * b[1] + a[1] * b[0] - a[1] * b[1];
}

}  // namespace support
