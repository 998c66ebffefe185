#pragma once

#include <stdexcept>
#include <string>

namespace glarc {

// Error taxonomy mirrors the CLI exit codes: usage -> 1, data -> 2, numeric -> 3.

// Bad arguments, bad flags, out-of-range hyperparameters.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files, inconsistent records, unreadable paths.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/Inf in a computation, diverging training, non-deterministic loss.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace glarc
