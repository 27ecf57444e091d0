#pragma once

#include <stdexcept>
#include <string>

namespace piw {

// Base of everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input-contract failures: bad arguments, malformed data, out-of-scope
// parameters. The CLI maps these to exit code 1.
struct InputError : Error {
    using Error::Error;
};

struct InvalidInput : InputError {
    using InputError::InputError;
};

struct InvalidMatrix : InputError {
    using InputError::InputError;
};

struct DimensionError : InputError {
    using InputError::InputError;
};

struct NotPositiveDefinite : InputError {
    using InputError::InputError;
};

struct InsufficientData : InputError {
    using InputError::InputError;
};

// Floor/shrink calculus needs a scalar scale matrix Psi = alpha*I.
struct NotDiagonalScalePrior : InputError {
    using InputError::InputError;
};

// Conditioning failure of an observed-block covariance (EBLUP).
struct SingularBlock : InputError {
    using InputError::InputError;
};

// Numerical-contract failures: a computed result violates an invariant the
// implementation promises (residual bounds, bracketing). The CLI maps these
// to exit code 2; reaching one is a bug signal, not a user error.
struct ContractViolation : Error {
    using Error::Error;
};

struct SolverError : ContractViolation {
    using ContractViolation::ContractViolation;
};

}  // namespace piw
