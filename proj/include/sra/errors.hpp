#pragma once

#include <stdexcept>
#include <string>

namespace sra {

// Base for everything this library throws on purpose. The CLI catches
// Error, prints the message and exits nonzero; anything else is a bug.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or mismatched file contents (bad magic, bad version, bad shape).
struct FormatError : Error {
  using Error::Error;
};

// File shorter than the geometry implies.
struct TruncationError : FormatError {
  using FormatError::FormatError;
};

// Sample value outside the declared bit depth, or no usable value range.
struct RangeError : Error {
  using Error::Error;
};

// Plane or frame dimensions violate an operation's precondition.
struct DimensionError : Error {
  using Error::Error;
};

// Tensor/layer channel or size mismatch.
struct ShapeError : Error {
  using Error::Error;
};

// Caller-supplied data is unusable (empty input list, non-monotone curve...).
struct InputError : Error {
  using Error::Error;
};

// Bad or inconsistent run configuration.
struct ConfigError : Error {
  using Error::Error;
};

// External codec or plugin command failed; message carries captured output.
struct SubprocessError : Error {
  using Error::Error;
};

// Invariant that should be unreachable was violated.
struct InternalError : Error {
  using Error::Error;
};

}  // namespace sra
