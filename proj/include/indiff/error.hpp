#pragma once

#include <stdexcept>
#include <string>

namespace indiff {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration / input parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A model coefficient was evaluated outside its validity box or returned an
/// invalid value (sigma <= 0, non-finite, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Generic numerical failure (divergence, vanishing vega, bracket failure).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature did not reach the requested tolerance.
class QuadratureError : public NumericError {
public:
    QuadratureError(const std::string& what, double estimate, double error_bound)
        : NumericError(what + " (estimate " + std::to_string(estimate) + ", error bound " +
                       std::to_string(error_bound) + ")"),
          estimate_(estimate),
          error_bound_(error_bound) {}

    double estimate() const noexcept { return estimate_; }
    double error_bound() const noexcept { return error_bound_; }

private:
    double estimate_;
    double error_bound_;
};

}  // namespace indiff
