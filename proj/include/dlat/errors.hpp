#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlat {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
  using Error::Error;
};

class UnsupportedBoundary : public Error {
public:
  using Error::Error;
};

/// Argument outside the domain where the quantity is defined
/// (on the spectrum without a side, wrong half-plane, ...).
class DomainError : public Error {
public:
  using Error::Error;
};

/// An iteration or extrapolation failed to settle. Carries whatever the
/// last iterate was so callers can inspect or report it.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string &what, double last_estimate,
                   std::vector<double> tail = {},
                   std::vector<std::complex<double>> last_iterate = {})
      : Error(what), last_estimate(last_estimate), tail(std::move(tail)),
        last_iterate(std::move(last_iterate)) {}
  double last_estimate;
  std::vector<double> tail;
  std::vector<std::complex<double>> last_iterate;
};

/// The small Woodbury system is singular at working precision.
class NearEigenvalueError : public Error {
public:
  NearEigenvalueError(const std::string &what, double smin)
      : Error(what), smallest_singular_value(smin) {}
  double smallest_singular_value;
};

/// An eigenvalue sits on an end of a search interval.
class BoundaryCollision : public Error {
public:
  BoundaryCollision(const std::string &what, double where)
      : Error(what), location(where) {}
  double location;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class NonGenericError : public Error {
public:
  NonGenericError(const std::string &what, double smin)
      : Error(what), smallest_singular_value(smin) {}
  double smallest_singular_value;
};

class IllConditionedFit : public Error {
public:
  using Error::Error;
};

class BoxTooSmall : public Error {
public:
  BoxTooSmall(const std::string &what, int minimal_L)
      : Error(what), minimal_half_width(minimal_L) {}
  int minimal_half_width;
};

/// Bad experiment configuration. `key` is the dotted path of the offending
/// entry when one is known.
class ConfigError : public Error {
public:
  ConfigError(const std::string &what, std::string key = {})
      : Error(key.empty() ? what : key + ": " + what), key(std::move(key)) {}
  std::string key;
};

class IoError : public Error {
public:
  using Error::Error;
};

} // namespace dlat
