#pragma once

#include <stdexcept>
#include <string>

namespace gbsde {

/// Argument outside the mathematical domain of a function (e.g. a modulus at x < 0).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid construction or call parameter.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Process or terminal data does not cover the nodes an operation needs.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordering precondition between stopping times violated.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative scheme failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A Picard map cannot be made contractive on any piece of the lattice.
class NonContractionError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

}  // namespace gbsde
