#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drobust {

/// Base class for all errors thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An argument value lies outside the operation's domain.
struct DomainError : Error {
  using Error::Error;
};

/// The operation is not defined for the given specification
/// (e.g. the gradient of the 0-1 loss).
struct UnsupportedError : Error {
  using Error::Error;
};

/// Dataset, grouping, fold, or experiment configuration problems.
struct ConfigError : Error {
  using Error::Error;
};

/// A closed-form identity was requested outside the regime where it holds.
struct RegimeError : Error {
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
struct ParseError : Error {
  explicit ParseError(const std::string& msg, std::size_t line = 0)
      : Error(line == 0 ? msg : msg + " (line " + std::to_string(line) + ")"),
        line_number(line) {}
  std::size_t line_number;
};

/// Numerical failure inside a solver or the optimizer.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace drobust
