#pragma once

#include <stdexcept>
#include <string>

namespace iva {

// Base class for all numerical failures raised by this library. The CLI maps
// these to exit code 2; anything else (bad flags, malformed files) is a usage
// error and maps to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A pivot of the Cholesky factorization fell below tolerance. Signals a
// degenerate weighted covariance matrix.
class NotPositiveDefinite : public Error {
public:
    using Error::Error;
};

// An iterative decomposition failed to converge on pathological input.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

// A linear system or inverse was requested for a rank-deficient matrix.
class Singular : public Error {
public:
    using Error::Error;
};

// The secular function was evaluated too close to one of its poles.
class PoleEvaluation : public Error {
public:
    using Error::Error;
};

// The protected Newton iteration ran out of steps.
class MaxIterationsExceeded : public Error {
public:
    using Error::Error;
};

// A quadratic-form denominator in the source steering update vanished.
class DegenerateDenominator : public Error {
public:
    using Error::Error;
};

// The Schur complement feeding the rank-2 update came out negative beyond
// round-off tolerance.
class NonPositiveZ : public Error {
public:
    using Error::Error;
};

// The reference signal matrix is rank deficient; scale-invariant metrics are
// undefined.
class DegenerateReference : public Error {
public:
    using Error::Error;
};

// Input signal shorter than one analysis frame.
class TooShort : public Error {
public:
    using Error::Error;
};

// Malformed problem data (dimension mismatch, non-finite entries, z < 0, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

// File I/O failure (missing file, truncated RIFF chunk, ...).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace iva
