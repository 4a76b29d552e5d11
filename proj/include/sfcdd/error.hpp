#pragma once

#include <stdexcept>
#include <string>

namespace sfcdd {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument violated a documented precondition (range, dimension, size).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Cholesky met a nonpositive pivot.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// Krylov recurrence broke down (nonpositive curvature, refused operator).
class SolverError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public SolverError {
 public:
  using SolverError::SolverError;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace detail
}  // namespace sfcdd
