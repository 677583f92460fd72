#pragma once

#include <stdexcept>
#include <string>

namespace metivier {

// Bad input: wrong dimensions, malformed expressions, violated preconditions.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A computation ran but could not certify its own accuracy
// (quadrature non-convergence, finite-difference instability, tail checks).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace metivier
