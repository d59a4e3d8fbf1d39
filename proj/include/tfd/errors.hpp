#pragma once

#include <stdexcept>
#include <string>

namespace tfd {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument for a mathematical function or invalid parameter set.
struct DomainError : Error {
    using Error::Error;
};

// Iterative method exhausted its budget.
struct ConvergenceError : Error {
    using Error::Error;
};

// Solution left the admissible region (negative compartments, non-finite values).
struct NumericalError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace tfd
