#pragma once

#include <stdexcept>
#include <string>

namespace entarrow {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller violated a precondition (bad dimensions, empty lists, ...).
class UsageError : public Error {
public:
    using Error::Error;
};

// A density matrix has an eigenvalue below the clipping tolerance.
class PositivityError : public Error {
public:
    using Error::Error;
};

// No macrostate projector captures the state above the membership threshold.
class NoMacrostateError : public Error {
public:
    using Error::Error;
};

// Time integration left its validity envelope (trace drift).
class IntegrationError : public Error {
public:
    using Error::Error;
};

// Exponential fit impossible (signal does not decay, relaxation absent).
class FitError : public Error {
public:
    using Error::Error;
};

// Experiment configuration failed schema validation. `path` names the field.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace entarrow
