#pragma once

#include <stdexcept>
#include <string>

namespace dprog {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration: unreadable or malformed rule, config, or label-space
/// files, rules that do not fit the label space, bad option values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates a domain invariant (datasets, matrix files,
/// params files, shape mismatches between artifacts).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite or runaway objective.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dprog
