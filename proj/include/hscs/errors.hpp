#pragma once

#include <stdexcept>
#include <string>

namespace hscs {

// Base of every error thrown by the library. The CLI maps each subclass to
// its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class OutOfBounds : public DimensionMismatch {
 public:
  using DimensionMismatch::DimensionMismatch;
};

// Input is well-formed but mathematically unusable (zero signature,
// rank-0 background covariance).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  enum class Kind { Io, BadMagic, Truncated, TrailingData, DimensionOverflow, Parse, MissingField };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace hscs
