#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latconf {

// Root of the library's error hierarchy. The CLI maps each branch to its own exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input violates a structural or semantic contract (bad graph, bad query, bad spec).
class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public ValidationError {
public:
    ParseError(std::size_t line, const std::string& what)
        : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// A bounded enumeration would exceed its configured size.
class LimitExceeded : public Error {
public:
    LimitExceeded(std::size_t needed, std::size_t limit)
        : Error("enumeration needs " + std::to_string(needed) + " candidates, limit is " +
                std::to_string(limit) + " (use the hill-climbing strategy instead)"),
          needed_(needed), limit_(limit) {}

    std::size_t needed() const noexcept { return needed_; }
    std::size_t limit() const noexcept { return limit_; }

private:
    std::size_t needed_;
    std::size_t limit_;
};

// Exhaustive CI enumeration over too many variables.
class GuardExceeded : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace latconf
