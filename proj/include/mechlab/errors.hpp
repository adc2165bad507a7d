// SPDX-License-Identifier: MIT
#pragma once

#include <stdexcept>
#include <string>

namespace mechlab {

/// Base class for all mechlab contract violations, so callers can catch the
/// library's errors without catching unrelated std exceptions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Gradient requested on the support boundary of a density with no analytic
/// derivative there (tabulated grids).
class BoundaryPointError : public Error {
 public:
  using Error::Error;
};

/// An operation defined only for one triangle orientation was called with the
/// other one.
class WrongOrientationError : public Error {
 public:
  using Error::Error;
};

/// Straightening cut outside the admissible interval (v2_lower, a*alpha].
class BadCutError : public Error {
 public:
  using Error::Error;
};

/// Type grid resolution above the supported cap.
class GridTooLargeError : public Error {
 public:
  using Error::Error;
};

/// LP solver failed to reach optimality (numerical stall); never silently
/// approximated.
class SolverFailureError : public Error {
 public:
  using Error::Error;
};

/// Conditional slice v1+v2 = w carries zero density mass.
class ZeroDensitySliceError : public Error {
 public:
  using Error::Error;
};

/// Division by a vanishing density value in a virtual-utility formula.
class DivisionByZeroError : public Error {
 public:
  using Error::Error;
};

/// First-order conditions requested on a regime boundary (p2 = 0 or
/// a*p1 = p2) where they do not apply.
class OnBoundaryError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent user input (JSON specs, invalid mechanisms).
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace mechlab
