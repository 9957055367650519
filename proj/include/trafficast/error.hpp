#pragma once

#include <stdexcept>
#include <string>

namespace trafficast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV rows, images, checkpoints).
class DataError : public Error {
public:
    using Error::Error;
};

/// A configuration value or argument violates a documented precondition.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Training blew up (non-finite loss or the divergence detector fired).
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace trafficast
