#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace leakloc {

/// Base class for every domain error raised by the library. The CLI maps
/// these to exit code 2; anything else is a bug.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the 1-based line number when known (0 otherwise).
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// The input uses a hydraulic feature the solver cannot represent.
class UnsupportedFeature : public Error {
public:
    explicit UnsupportedFeature(const std::string& what) : Error("unsupported feature: " + what) {}
};

class SolverError : public Error {
public:
    SolverError(const std::string& message, double residual_norm = 0.0)
        : Error(message), residual_norm_(residual_norm) {}

    double residual_norm() const noexcept { return residual_norm_; }

private:
    double residual_norm_;
};

}  // namespace leakloc
