#pragma once

#include <stdexcept>
#include <string>

namespace quarks {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid dimensions, hyperparameters out of range, malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Singular systems, rank deficiency, non-finite values, failed factorizations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// File parsing and filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace quarks
