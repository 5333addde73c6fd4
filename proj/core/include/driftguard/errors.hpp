#pragma once

#include <stdexcept>
#include <string>

namespace driftguard {

/// Base class for all engine errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input data (records, dimensions, non-finite values).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Fit preconditions not met (too few samples, degenerate baseline, ...).
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// An iterative fit failed to converge.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Bad configuration value or missing model artifact.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File / stream problems, including parse failures with line context.
class IoError : public Error {
public:
    using Error::Error;
};

/// Scenario generation could not satisfy its constraints.
class GenerationError : public Error {
public:
    using Error::Error;
};

}  // namespace driftguard
