#pragma once

#include <stdexcept>
#include <string>

namespace sessrl {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or invalid argument combinations. CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File, parsing, vocabulary, and artifact-compatibility problems. CLI exit code 2.
class DataError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required. CLI exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Tensor dimension mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Index outside a container's valid range.
class BoundsError : public Error {
public:
    using Error::Error;
};

} // namespace sessrl
