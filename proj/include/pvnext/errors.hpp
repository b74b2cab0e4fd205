#pragma once

#include <stdexcept>
#include <string>

namespace pvnext {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration, shapes, or argument values. CLI exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

// Tensor/layer shape mismatches.
struct DimensionError : ConfigError {
  using ConfigError::ConfigError;
};

// File and format problems. CLI exit code 3.
struct DataError : Error {
  enum class Code {
    io,
    bad_magic,
    version_mismatch,
    truncated,
    digest_mismatch,
    schema_mismatch,
  };

  DataError(Code code, const std::string& msg) : Error(msg), code(code) {}

  Code code;
};

// Non-finite values where finite ones are required. CLI exit code 4.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace pvnext
