#pragma once

#include <stdexcept>
#include <string>

namespace qlbm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-facing configuration (unknown model name, bad scenario key, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Mismatched or unsupported sizes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Operation precondition violated by the caller.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown (degenerate projection, non-normalizable state, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Request exceeds desk-scale resource limits.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Broken internal invariant.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace qlbm
