#pragma once

#include <stdexcept>
#include <string>

namespace mcg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments, shapes, or configuration detected before any compute.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated on-disk data.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or divergence during numerical work.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace mcg
