#pragma once

#include <stdexcept>
#include <string>

namespace kftune {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad shapes, out-of-domain arguments and similar caller mistakes.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A matrix that has to be positive (semi)definite is not.
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

/// Scenario configuration could not be parsed or validated.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kftune
