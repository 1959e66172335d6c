#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace invprox {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// User input problems: malformed expressions, bad configs, bad CSV.
class InputError : public Error {
public:
    using Error::Error;
};

/// Expression parse failure at a 0-based character offset.
class ParseError : public InputError {
public:
    ParseError(std::size_t position, const std::string& message)
        : InputError("parse error at position " + std::to_string(position) + ": " + message),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

class UnknownIdentifier : public ParseError {
public:
    UnknownIdentifier(std::size_t position, const std::string& name)
        : ParseError(position, "unknown identifier '" + name + "'"), name_(name) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class ArityError : public ParseError {
public:
    using ParseError::ParseError;
};

class DimensionMismatch : public InputError {
public:
    using InputError::InputError;
};

/// Failures of the numerical pipeline (mapped to CLI exit code 3).
class NumericalError : public Error {
public:
    using Error::Error;
};

class NonFiniteValue : public NumericalError {
public:
    explicit NonFiniteValue(const std::string& where)
        : NumericalError("non-finite function value at " + where) {}
};

class DegenerateSpace : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotPSD : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InconsistentSystem : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ZeroImage : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ZeroNorm : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class BudgetExceeded : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace invprox
