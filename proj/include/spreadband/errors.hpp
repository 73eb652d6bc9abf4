#pragma once

#include <stdexcept>
#include <string>

namespace spreadband {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid parameters, config keys, or arguments outside a function's domain.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an evaluator (z <= 0, x > y, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A special-function evaluation failed to converge within its budget.
class EvalError : public Error {
public:
    using Error::Error;
};

/// Root finding or case classification failed; carries diagnostic text.
class SolverError : public Error {
public:
    using Error::Error;
};

/// A residual or agreement check exceeded its tolerance.
class VerifyError : public Error {
public:
    using Error::Error;
};

}  // namespace spreadband
