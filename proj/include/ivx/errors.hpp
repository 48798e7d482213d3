#pragma once

#include <stdexcept>
#include <string>

namespace ivx {

// Bad inputs or misuse of an interface. The CLI maps these to exit code 2.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A computation that started from valid inputs failed to produce a reliable
// result. The CLI maps these to exit code 3.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operator algebra exceeded its configured monomial or derivative degree caps.
struct OrderOverflow : NumericalError {
  using NumericalError::NumericalError;
};

// A polynomial that must be free of negative or half-integer time powers
// still carries such terms above tolerance after pruning.
struct CancellationFailure : NumericalError {
  using NumericalError::NumericalError;
};

// Target call price violates the static no-arbitrage interval, so no implied
// volatility exists.
struct OutOfArbitrageBounds : ValidationError {
  using ValidationError::ValidationError;
};

// An iterative solver hit its iteration cap without meeting its tolerance.
struct NoConvergence : NumericalError {
  using NumericalError::NumericalError;
};

// The averaged squared volatility used as the zero-order level is not
// strictly positive.
struct NonPositiveVariance : NumericalError {
  using NumericalError::NumericalError;
};

// Finite-difference estimates of a model coefficient derivative disagree
// across step sizes, so no trustworthy value is available.
struct DerivativeUnavailable : NumericalError {
  using NumericalError::NumericalError;
};

// A closed-form-in-time result was requested for a model that only supports
// numeric time integration.
struct SymbolicUnavailable : ValidationError {
  using ValidationError::ValidationError;
};

// The complex logarithm inside the characteristic function could not be
// continued unambiguously along the integration path.
struct BranchInstability : NumericalError {
  using NumericalError::NumericalError;
};

// Adaptive quadrature failed to reach its tolerance within its depth budget.
struct QuadratureFailure : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace ivx
