#pragma once

#include <stdexcept>
#include <string>

namespace gridflex {

/// Base class for all gridflex errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file; message carries path and line number.
struct ParseError : Error {
    using Error::Error;
};

/// Structurally valid input that violates a domain invariant.
struct ValidationError : Error {
    using Error::Error;
};

/// Non-finite values or a numerically broken solve.
struct NumericalError : Error {
    using Error::Error;
};

/// Matrix/vector shapes do not agree.
struct DimensionError : Error {
    using Error::Error;
};

/// Invalid stochastic-model parameters.
struct ModelError : Error {
    using Error::Error;
};

/// A mutable state object was fed an impossible value.
struct InvalidState : Error {
    using Error::Error;
};

/// Hourly shed/restore iteration cap reached without a feasible point.
struct NonConvergence : Error {
    using Error::Error;
};

/// Zero-variance series passed to a correlation statistic.
struct DegenerateSeries : Error {
    using Error::Error;
};

struct InvalidBandwidth : Error {
    using Error::Error;
};

/// Frontier search exhausted its upper bracket.
struct NoFeasibleScale : Error {
    using Error::Error;
};

} // namespace gridflex
