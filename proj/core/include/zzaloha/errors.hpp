#pragma once

#include <stdexcept>
#include <string>

namespace zzaloha {

/// Argument outside the domain of a probability function (e.g. i > M - N).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Structurally invalid input: bad parameters, non-stochastic matrix,
/// mismatched simulation/analytic configurations.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace zzaloha
