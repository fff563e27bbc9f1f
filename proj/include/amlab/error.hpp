// Error types shared by all amlab modules.
#pragma once

#include <stdexcept>
#include <string>

namespace amlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand sizes disagree (vector lengths, grid shapes, piece dimensions).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the range an operation can handle.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Velocity or support exceeds the truncation bound of a phase grid.
class TruncationError : public RangeError {
 public:
  TruncationError(const std::string& what, double bound)
      : RangeError(what), bound_(bound) {}
  double bound() const noexcept { return bound_; }

 private:
  double bound_;
};

/// Malformed input (configuration, file contents, invalid parameters).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A linear program has no feasible point or no finite optimum.
class LpError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

inline void require_dims(bool ok, const std::string& msg) {
  if (!ok) throw DimensionError(msg);
}

}  // namespace amlab
