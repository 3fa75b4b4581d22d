#pragma once

#include <stdexcept>
#include <string>

namespace rwlab {

/// Bad argument to a library call (violated precondition).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A quantity is undefined for the given input, e.g. a truncation with no
/// mass below the cutoff or a zero cost integral.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A configured resource cap (box volume, certified volume) would be exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Monte Carlo estimate could not be formed, e.g. every replica censored.
class StatisticalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace rwlab
