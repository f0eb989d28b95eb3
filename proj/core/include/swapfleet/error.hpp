#pragma once

#include <stdexcept>
#include <string>

namespace swapfleet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Integration blew up or an iterative procedure failed to converge.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double residual = 0.0)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Malformed or inconsistent input data (sightings, trips).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace swapfleet
