#pragma once

#include <stdexcept>
#include <string>

namespace levyscale {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An input lies outside the mathematical domain of an operation
/// (net profit condition violated, p >= 1, negative argument, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative or quadrature routine did not reach its tolerance.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}

  /// Residual or error estimate reached before giving up.
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};

/// A linear system is too close to singular to be solved reliably.
class IllConditioned : public Error {
 public:
  IllConditioned(const std::string& what, double smallest_pivot)
      : Error(what), smallest_pivot_(smallest_pivot) {}

  double smallest_pivot() const noexcept { return smallest_pivot_; }

 private:
  double smallest_pivot_;
};

/// An estimate left the region where the plug-in formulas are defined
/// (p_hat >= 1). The raw value is kept for reporting.
class DegenerateEstimate : public DomainError {
 public:
  DegenerateEstimate(const std::string& what, double raw)
      : DomainError(what), raw_(raw) {}

  double raw() const noexcept { return raw_; }

 private:
  double raw_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace levyscale
