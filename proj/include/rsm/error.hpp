#pragma once

#include <stdexcept>
#include <string>

namespace rsm {

// Bad arguments, bad configuration, or inputs that contradict each other.
// The CLI maps these to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Not enough room to place the requested objects.
class CapacityError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Corrupt, truncated, or incompatible files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NaN/Inf in a tensor, gradient, or loss.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rsm
