#pragma once

#include <stdexcept>
#include <string>

namespace nagflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The symmetric part of a linear field is not positive definite.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Drift frequencies admit no rational fit with the allowed denominators.
class NotCommensurate : public Error {
 public:
  using Error::Error;
};

/// Restart period outside the admissible window (T_lower, T_upper].
class WindowViolation : public Error {
 public:
  using Error::Error;
};

class BetaOutOfRange : public Error {
 public:
  using Error::Error;
};

}  // namespace nagflow
