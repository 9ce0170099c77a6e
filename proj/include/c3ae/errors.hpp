#pragma once

#include <stdexcept>
#include <string>

namespace c3ae {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File access or parse problems. The CLI maps these to exit code 2.
struct IoError : Error {
  using Error::Error;
};

/// Degenerate numeric input (zero-norm illuminant, empty sample set, ...).
/// The CLI maps these to exit code 3.
struct DomainError : Error {
  using Error::Error;
};

/// Model or pipeline configuration mismatch (wrong code size, missing
/// head, ...). The CLI maps these to exit code 3.
struct ConfigError : Error {
  using Error::Error;
};

/// Model container decode failure. Each failure mode is a distinct kind so
/// callers can tell a wrong file apart from a damaged one.
struct ModelFormatError : IoError {
  enum class Kind { BadMagic, BadVersion, Truncated, Corrupt };
  Kind kind;
  ModelFormatError(Kind k, const std::string& msg) : IoError(msg), kind(k) {}
};

}  // namespace c3ae
