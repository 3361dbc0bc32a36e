#pragma once

#include <stdexcept>
#include <string>

namespace specfno {

// Error hierarchy. The CLI maps each family onto a distinct exit code.

/// Malformed or inconsistent configuration (unknown keys, bad values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its domain (non-nesting grids, bad shapes).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Truncation K does not fit the grid: requires K < N/2.
class ModeOverflowError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

/// A runtime numerical check failed, e.g. an inverse transform left a
/// non-negligible imaginary residue.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure; the message carries the offending path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace specfno
