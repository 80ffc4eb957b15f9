#pragma once

#include <stdexcept>
#include <string>

namespace cpekit {

// Bad arguments, malformed files, violated preconditions. The CLI maps these to exit code 2.
class InputError : public std::invalid_argument {
public:
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// A trajectory shorter than the requested Hankel depth.
class InsufficientLengthError : public InputError {
public:
    using InputError::InputError;
};

// Requested signal lengths do not meet the minimal-length bound of the design mode.
class BoundViolationError : public InputError {
public:
    using InputError::InputError;
};

// A well-formed request the design recipes do not cover.
class UnsupportedCaseError : public InputError {
public:
    using InputError::InputError;
};

// Numerical failure on valid input. The CLI maps these to exit code 1.
class ComputationError : public std::runtime_error {
public:
    explicit ComputationError(const std::string& what) : std::runtime_error(what) {}
};

class InfeasibleError : public ComputationError {
public:
    using ComputationError::ComputationError;
};

class DegenerateProblemError : public ComputationError {
public:
    using ComputationError::ComputationError;
};

// A user-supplied callback broke its contract (e.g. a non-symmetric LMI assembly).
class ContractViolation : public ComputationError {
public:
    using ComputationError::ComputationError;
};

void require(bool condition, const std::string& message);

}  // namespace cpekit
