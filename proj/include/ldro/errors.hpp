#pragma once

#include <stdexcept>
#include <string>

namespace ldro {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Model parameters outside the family's admissible domain.
struct ParameterError : Error {
  using Error::Error;
};

// Function arguments outside the admissible set (off-simplex points,
// singular covariances, ...).
struct DomainError : Error {
  using Error::Error;
};

// Malformed trajectories or statistic inputs.
struct DataError : Error {
  using Error::Error;
};

// Data that makes an estimator undefined (zero denominators).
struct DegenerateDataError : DataError {
  using DataError::DataError;
};

// Incompatible pairings, e.g. a statistic fed to a solver for another family.
struct UsageError : Error {
  using Error::Error;
};

// Iterative solver failed to converge.
struct StabilityError : Error {
  using Error::Error;
};

// Too few usable points for a regression or rate estimate.
struct InsufficientDataError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace ldro
