#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rlff {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

/// A depth of zero (or a non-finite depth) was used as a projection source.
class SingularDepthError : public Error {
 public:
  using Error::Error;
};

class DegenerateAxesError : public Error {
 public:
  using Error::Error;
};

class InsufficientViewsError : public Error {
 public:
  using Error::Error;
};

/// Design matrix of the plane fit is rank deficient (collinear or repeated views).
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

class BehindCameraError : public Error {
 public:
  using Error::Error;
};

class OffsetUnrecoverableError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. Carries the 1-based line number of the offending line.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace rlff
