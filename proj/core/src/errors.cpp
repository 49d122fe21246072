#include "stflow/errors.hpp"

namespace stflow {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Domain: return "DomainError";
        case ErrorKind::NonFinite: return "NonFinite";
        case ErrorKind::GridTooCoarse: return "GridTooCoarse";
        case ErrorKind::NoContraction: return "NoContraction";
        case ErrorKind::NotReached: return "NotReached";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::SmoothnessRequired: return "SmoothnessRequired";
        case ErrorKind::MissingArray: return "MissingArray";
        case ErrorKind::DegenerateFit: return "DegenerateFit";
        case ErrorKind::InconclusiveLimit: return "InconclusiveLimit";
        case ErrorKind::Precondition: return "PreconditionError";
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::Validation: return "ValidationError";
        case ErrorKind::Io: return "IoError";
    }
    return "Error";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Config:
        case ErrorKind::Parse:
        case ErrorKind::Validation:
        case ErrorKind::Precondition:
        case ErrorKind::Domain:
            return 2;
        case ErrorKind::Io:
            return 4;
        default:
            return 3;
    }
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

NonFiniteError::NonFiniteError(const std::string& what, double partial)
    : Error(ErrorKind::NonFinite, what), partial_(partial) {}

ValidationError::ValidationError(std::string field, const std::string& what)
    : Error(ErrorKind::Validation, field + ": " + what), field_(std::move(field)) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace stflow
