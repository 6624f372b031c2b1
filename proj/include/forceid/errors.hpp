#pragma once

#include <stdexcept>
#include <string>

namespace forceid {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mismatched vector or matrix shapes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Problem definition violates a precondition (bad parameters, bad config file).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Base for failures of the numerical kernels (exit code 3 in the CLI).
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularMatrixError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotPositiveDefiniteError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConvergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A BEM time step whose 2x2 system is degenerate.
class SingularStepError : public NumericalError {
public:
    SingularStepError(int step, const std::string& what)
        : NumericalError(what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace forceid
