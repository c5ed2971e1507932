#pragma once

#include <stdexcept>
#include <string>

namespace mmfp {

// Error taxonomy used across the library. Everything derives from Error so
// callers can catch broadly; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/operation shape mismatches.
class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& msg) : Error(msg) {}
};

// Violated call contract (bad argument combination, misaligned inputs).
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Operation applied in an invalid object state (e.g. reusing a consumed graph).
class StateError : public Error {
 public:
  explicit StateError(const std::string& msg) : Error(msg) {}
};

// Malformed caller-provided data (unknown label, short wave, ...).
class InputError : public Error {
 public:
  explicit InputError(const std::string& msg) : Error(msg) {}
};

// A sensor stream does not cover the requested interval.
class TruncationError : public InputError {
 public:
  explicit TruncationError(const std::string& msg) : InputError(msg) {}
};

// Configuration inconsistent with data or checkpoint.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File/container problems.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Numeric breakdown (NaN loss, failed verification suite).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

}  // namespace mmfp
