#pragma once

#include <stdexcept>
#include <string>

namespace dtnlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad construction arguments (even N, pad = 0, dimension out of range...).
struct InvalidArgument : Error {
  using Error::Error;
};

/// A nonlinearity failed its class certification, or c >= lambda_1.
struct ClassViolation : Error {
  using Error::Error;
};

/// Potential dips below the admissible floor -c.
struct QNotAdmissible : Error {
  using Error::Error;
};

/// Grid spacing too coarse to resolve the oscillatory phase (spacing > h/4).
struct ResolutionError : Error {
  using Error::Error;
};

struct InsufficientData : Error {
  using Error::Error;
};

struct NonConvergence : Error {
  double residual;
  NonConvergence(const std::string& what, double res) : Error(what), residual(res) {}
};

}  // namespace dtnlab
