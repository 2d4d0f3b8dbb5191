#pragma once

#include <stdexcept>
#include <string>

namespace avsync {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or record.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Index outside the valid domain of a track, grid or stream.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Array or segment with the wrong dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameter combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent synthetic-stream specification.
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace avsync
