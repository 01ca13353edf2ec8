#pragma once

#include <stdexcept>
#include <string>

namespace homnet {

/// Base class for all homnet errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Unreadable, malformed, or inconsistent input data (CLI exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Analysis that cannot be carried out on the given inputs (CLI exit code 4),
/// e.g. assortativity on an edgeless graph or negative sampling beyond capacity.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace homnet
