#pragma once

#include <stdexcept>
#include <string>

namespace cpsi {

// Bad caller input: out-of-range indices, invalid parameters, shape mismatch.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Not enough usable data to fit a model (e.g. covariance estimation).
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The observed data does not satisfy the selection event it is conditioned on.
class ConsistencyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Floating point breakdown (crossed truncation bounds, failed factorizations).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cpsi
