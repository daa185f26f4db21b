#pragma once

#include <stdexcept>
#include <string>

namespace nlkw {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument to an operation (bad horizon, empty bracket, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent experiment configuration; message names the key.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Mismatched dimensions between grids, paths or strategies.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Operation requires an analytic form the family does not provide.
class CapabilityError : public Error {
public:
    using Error::Error;
};

/// Floating-point failure (overflow, rank-deficient solve); message carries context.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure; message carries the path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace nlkw
