#pragma once

#include <stdexcept>
#include <string>

namespace leq {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigParseError : public Error {
public:
    using Error::Error;
};

/// A problem instance violates one of its invariants. `field()` names the
/// offending configuration field.
class ValidationError : public Error {
public:
    ValidationError(const std::string& message, std::string field)
        : Error(message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NonFiniteValue : public Error {
public:
    using Error::Error;
};

/// Backward integration escaped before covering a single step.
class BlowUpBeforeTerminal : public Error {
public:
    BlowUpBeforeTerminal(const std::string& message, double eta)
        : Error(message), eta_(eta) {}

    double eta() const noexcept { return eta_; }

private:
    double eta_;
};

class MissingPrerequisite : public Error {
public:
    using Error::Error;
};

class GridMismatch : public Error {
public:
    using Error::Error;
};

class AllPathsOverflowed : public Error {
public:
    using Error::Error;
};

} // namespace leq
