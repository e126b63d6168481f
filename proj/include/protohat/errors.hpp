#pragma once

#include <stdexcept>
#include <string>

namespace protohat {

// Base class for all library failures.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/width contract violations (matmul inner dims, feature widths, ...).
struct DimensionError : Error {
    using Error::Error;
};

// Malformed hypergraph structure (empty edge list, invalid memberships).
struct StructuralError : Error {
    using Error::Error;
};

// Dataset parsing or validation failure; messages carry file and line.
struct LoadError : Error {
    using Error::Error;
};

// Non-finite values, divergence, and other numeric breakdowns.
struct NumericError : Error {
    using Error::Error;
};

// A softmax/normalization row with no admissible entries.
struct DegenerateRowError : NumericError {
    using NumericError::NumericError;
};

// Invalid run configuration.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace protohat
