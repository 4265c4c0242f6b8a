#pragma once

#include <stdexcept>
#include <string>

namespace sfe {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PoleError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
struct SingularError : Error { using Error::Error; };
struct RegimeError : Error { using Error::Error; };
struct NoSolutionError : Error { using Error::Error; };

struct ParseError : Error {
    int line;
    ParseError(const std::string& msg, int line_ = 0)
        : Error(line_ > 0 ? "line " + std::to_string(line_) + ": " + msg : msg), line(line_) {}
};

// carries the offending field name so callers can test for it
struct ValidationError : Error {
    std::string field;
    ValidationError(const std::string& field_, const std::string& msg)
        : Error(field_ + ": " + msg), field(field_) {}
};

struct NonConvergenceError : Error {
    double residual;
    int iterations;
    NonConvergenceError(const std::string& msg, double res, int it)
        : Error(msg), residual(res), iterations(it) {}
};

}  // namespace sfe
