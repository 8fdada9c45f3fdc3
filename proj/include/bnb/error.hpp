#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bnb {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. `line()` is 1-based; 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Invalid or infeasible parameter combination, detected before any work is done.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A value lies outside the domain an operation accepts (unknown item id, zero usage, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// A score distribution with no spread cannot yield a decision threshold.
class DegenerateDistribution : public Error {
public:
    using Error::Error;
};

}  // namespace bnb
