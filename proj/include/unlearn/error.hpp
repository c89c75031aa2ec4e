#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace unlearn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested sizes exceed what the available data can provide.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Invalid or empty input data, or a feature-dimension mismatch.
class InputError : public Error {
public:
    using Error::Error;
};

class DimensionError : public InputError {
public:
    using InputError::InputError;
};

/// Malformed file content. Carries the 1-based record (line) index.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t record)
        : Error(what + " (record " + std::to_string(record) + ")"), record_(record) {}

    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Non-finite values produced by a numerical routine.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Training loss became non-finite.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, std::size_t epoch)
        : NumericError(what + " at epoch " + std::to_string(epoch)), epoch_(epoch) {}

    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

/// A metric was requested where it is mathematically undefined.
class MetricError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace unlearn
