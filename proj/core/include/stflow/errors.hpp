#pragma once

#include <stdexcept>
#include <string>

namespace stflow {

enum class ErrorKind {
    Domain,
    NonFinite,
    GridTooCoarse,
    NoContraction,
    NotReached,
    NoConvergence,
    SmoothnessRequired,
    MissingArray,
    DegenerateFit,
    InconclusiveLimit,
    Precondition,
    Config,
    Parse,
    Validation,
    Io,
};

const char* to_string(ErrorKind kind) noexcept;

/// Process exit code for an error kind: 2 configuration, 3 numeric, 4 I/O.
int exit_code(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Divergent integral; carries the last partial value reached.
class NonFiniteError : public Error {
public:
    NonFiniteError(const std::string& what, double partial);
    double partial() const noexcept { return partial_; }

private:
    double partial_;
};

/// Configuration field failed validation; `field()` is the dotted path.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what);
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace stflow
