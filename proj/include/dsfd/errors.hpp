#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dsfd {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix or vector dimensions do not fit the operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A stream row violates the contract of the sketch (norm range, timestamp order).
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid construction parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed CSV input. Carries the 1-based line number.
class FormatError : public Error {
public:
    FormatError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dsfd
