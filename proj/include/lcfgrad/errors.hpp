#pragma once

#include <stdexcept>
#include <string>

namespace lcfgrad {

// Error taxonomy mirrored by the CLI exit codes (see tools/).
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file (mesh or config); message carries the line number.
struct ParseError : Error {
  using Error::Error;
};

// Degenerate or inverted geometry (detJ <= 0, rank-deficient face, ...).
struct GeometryError : Error {
  using Error::Error;
};

// Violated coupling constraints (cyclic pairing tolerance, ...).
struct ConstraintError : Error {
  using Error::Error;
};

// Bad configuration values (unsupported quadrature order, unknown face, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Factorization failed or rigid-body modes remain.
struct SingularSystemError : Error {
  using Error::Error;
};

// Non-convergence, NaN contributions, domain violations in the fatigue chain.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace lcfgrad
