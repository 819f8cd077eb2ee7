#pragma once

#include <stdexcept>
#include <string>

namespace kho {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid user-facing input: bad config files, bad CLI arguments, grids that
/// cannot hold the requested state. Maps to process exit code 1.
struct ConfigError : Error {
    using Error::Error;
};

/// A numerical guard tripped during a run: norm drift, window leakage,
/// discarded imaginary mass, contraction undersampling. Maps to exit code 2.
struct GuardError : Error {
    using Error::Error;
};

/// An operation was called outside its mathematical domain (chi at D = 0,
/// mismatched grids, non-unimodular multipliers, ...).
struct DomainError : Error {
    using Error::Error;
};

} // namespace kho
