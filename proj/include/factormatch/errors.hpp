#pragma once

#include <stdexcept>
#include <string>

namespace factormatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A configured size/count cap was exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// A numerical estimate cannot reach the requested precision.
class PrecisionError : public Error {
 public:
  using Error::Error;
};

/// A quantity would need data outside the finite window.
class CensoringError : public Error {
 public:
  using Error::Error;
};

/// A matching stage failed to converge within its sweep cap.
class StageDivergence : public Error {
 public:
  using Error::Error;
};

/// An internal invariant does not hold (indicates a bug).
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace factormatch
