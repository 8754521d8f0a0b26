#pragma once

#include <stdexcept>
#include <string>

namespace shapprop {

// Base for all library errors. Subclasses exist so callers can map failure
// classes to exit codes / recovery paths without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed model JSON / CSV input.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Graph edges form a cycle.
class CycleError : public Error {
 public:
  using Error::Error;
};

// Edge references a node id that does not exist.
class DanglingEdgeError : public Error {
 public:
  using Error::Error;
};

// Vector/matrix sizes disagree along an edge or with an input.
class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or violated type invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Model produced NaN/Inf, or a numerical routine failed.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

// Weighted least squares (or other dense solve) hit a singular system.
class SingularSystemError : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

}  // namespace shapprop
