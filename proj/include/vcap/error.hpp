#pragma once

#include <stdexcept>
#include <string>

namespace vcap {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside its admissible range (rates, ids, mixing weights, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incompatible file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Caller misuse that should be reported as a usage problem (CLI exit 1).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Training pipeline ordering violated (e.g. stage 2 on an untrained model).
class StageOrderError : public UsageError {
 public:
  using UsageError::UsageError;
};

/// Numerical breakdown during training.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace vcap
