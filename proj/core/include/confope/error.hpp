#pragma once

#include <stdexcept>
#include <string>

namespace confope {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array shapes disagree (e.g. a value table over the wrong state space).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A probability table or model failed its construction-time checks.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A sensitivity or algorithm parameter is out of its domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

}  // namespace confope
