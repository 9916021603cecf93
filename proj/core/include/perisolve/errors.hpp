#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace perisolve {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: mesh sizes, solver settings, instance files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Vectors or matrices whose sizes do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A structural hypothesis on the data (nonnegative weight, uniform
/// ellipticity, ...) does not hold. `hypothesis()` names it, e.g. "H(m)".
class HypothesisViolation : public Error {
public:
    HypothesisViolation(std::string hypothesis, const std::string& what)
        : Error(hypothesis + " violated: " + what), hypothesis_(std::move(hypothesis)) {}

    const std::string& hypothesis() const noexcept { return hypothesis_; }

private:
    std::string hypothesis_;
};

/// A factorization or solve failed.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// epsilon = 0 was requested while the weighted mass operator is singular.
class DegenerateOperator : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// An iteration hit its iteration cap. Carries the residual history and,
/// when raised from time stepping, the failing step index.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::vector<double> history, int failing_step = -1)
        : Error(what), history_(std::move(history)), failing_step_(failing_step) {}

    const std::vector<double>& history() const noexcept { return history_; }
    double last_residual() const noexcept { return history_.empty() ? 0.0 : history_.back(); }
    int failing_step() const noexcept { return failing_step_; }

private:
    std::vector<double> history_;
    int failing_step_;
};

}  // namespace perisolve
