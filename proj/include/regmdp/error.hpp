#pragma once

#include <stdexcept>
#include <string>

namespace regmdp {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the function's domain (x <= 0 for phi, zero probability
// under Shannon, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Invalid regularizer or configuration parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// A probability vector, MDP or policy that violates its invariants.
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Iterative solver did not reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// Singular linear system, bracket failure, or an internal consistency check.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace regmdp
