#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdeheat {

// Base of every error the library throws. The CLI maps each subclass onto an
// exit code (see cli.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration: bad JSON, missing or mistyped field.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed configuration that violates a model invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation (e.g. mu <= c).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A numerical quantity exceeded its blow-up threshold.
class BlowupError : public Error {
public:
    explicit BlowupError(const std::string& what, long path_index = -1)
        : Error(what), path_index_(path_index) {}

    [[nodiscard]] long path_index() const noexcept { return path_index_; }

private:
    long path_index_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace sdeheat
