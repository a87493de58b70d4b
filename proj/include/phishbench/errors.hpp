#pragma once

#include <stdexcept>
#include <string>

namespace phishbench {

/// Base of every error raised by the harness.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IOError : public Error {
public:
    using Error::Error;
};

/// Malformed text input. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, std::size_t line = 0)
        : Error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class AssetError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class RegionError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// External adapter failures.
class AdapterError : public Error {
public:
    using Error::Error;
};
class AdapterTimeout : public AdapterError {
public:
    using AdapterError::AdapterError;
};
class AdapterCrash : public AdapterError {
public:
    using AdapterError::AdapterError;
};
class ProtocolError : public AdapterError {
public:
    using AdapterError::AdapterError;
};

}  // namespace phishbench
