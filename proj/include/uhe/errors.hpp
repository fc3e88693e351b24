#pragma once

#include <stdexcept>
#include <string>

namespace uhe {

// Bad inputs: malformed grids/regions, non-Hermitian operators, unnormalized
// states, dimension mismatches, unknown config keys.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A time outside the span covered by a propagator family.
struct TimeSpanError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// Iterative eigensolver failed to reach the requested residual.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Output path cannot be created or written.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace uhe
