#pragma once

#include <stdexcept>
#include <string>

#include "bohmchsh/grid.hpp"

namespace bohmchsh {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad configuration, violated precondition, unbuildable state.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A requested wave function has zero norm (e.g. exact cancellation).
class ZeroNormError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Numerical failure of an otherwise valid computation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Probability mass reached the periodic edge of the grid on `axis`.
class BoundaryMassError : public NumericalError {
 public:
  BoundaryMassError(Axis axis, double mass)
      : NumericalError("boundary mass " + std::to_string(mass) + " on axis " +
                       axis_name(axis) + " exceeds the periodic-edge limit"),
        axis_(axis),
        mass_(mass) {}

  Axis axis() const { return axis_; }
  double mass() const { return mass_; }

 private:
  Axis axis_;
  double mass_;
};

/// Iterative solver ran out of iterations.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Collapse requested onto an outcome with (numerically) zero probability.
class ZeroProbabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace bohmchsh
