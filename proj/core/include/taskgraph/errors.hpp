#pragma once

#include <stdexcept>
#include <string>

namespace taskgraph {

/// Base of all library errors; `what()` carries a human-readable message.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (files, records, out-of-vocabulary labels).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Tensor shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Requested window falls outside the available frames.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Broken internal contract (state/param mismatch and similar).
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace taskgraph
