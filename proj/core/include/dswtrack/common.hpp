#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace dswtrack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller-supplied data violates a precondition (dimensions, simplex, ranges).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a function, e.g. log of a zero weight.
class DomainError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// A configuration the library does not support (e.g. Gaussian prior with M != 2).
class UnsupportedConfiguration : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Non-finite intermediate, singular system or non-converging solver.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Training diverged.
class TrainingFailure : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

/// Malformed file or document.
class ParseError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace dswtrack
