#pragma once

#include <stdexcept>
#include <string>

namespace edist {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad gamma, n < 1, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two objects that must share a dimension do not.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// An iterative or adaptive numerical routine failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace edist
