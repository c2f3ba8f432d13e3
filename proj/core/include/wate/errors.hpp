#pragma once

#include <stdexcept>
#include <string>

namespace wate {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: unknown names, bad learner specs, bad parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Problems with the observed data: shapes, arms, non-numeric columns.
class DataError : public Error {
public:
    using Error::Error;
};

/// Prediction rows and the rows an operation was asked about do not line up.
class RowError : public DataError {
public:
    using DataError::DataError;
};

/// A weight or estimating-equation denominator is numerically zero.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Propensity argument outside (0, 1).
class DomainError : public Error {
public:
    using Error::Error;
};

/// IRLS failed to converge even with the ridge fallback.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double last_deviance)
        : Error(what), last_deviance_(last_deviance) {}

    double last_deviance() const noexcept { return last_deviance_; }

private:
    double last_deviance_;
};

}  // namespace wate
