#pragma once

#include <stdexcept>
#include <string>

namespace opcrecipe {

// Base of every error raised by the library. `exit_code()` follows the CLI
// convention: 2 for validation problems, 3 for runtime failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 3; }
};

class ValidationError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class ParseError : public ValidationError {
public:
    ParseError(int line, const std::string& msg)
        : ValidationError("line " + std::to_string(line) + ": " + msg), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

class GeometryError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class RangeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ContractError : public Error {
public:
    using Error::Error;
};

class RecipeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SchemaError : public Error {
public:
    SchemaError(const std::string& msg, std::string raw) : Error(msg), raw_(std::move(raw)) {}
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace opcrecipe
