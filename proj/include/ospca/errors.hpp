#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace ospca {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: non-finite entries, unreadable files, bad shapes.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A scalar parameter is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Operand dimensions do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The input is mathematically degenerate for the requested operation
/// (rank-deficient covariance, nonpositive spectrum parameters, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A point handed to a checker does not satisfy the constraint set.
class FeasibilityError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or command-line configuration. `path` names the
/// offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace ospca
