#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hawkes {

// Bad argument or malformed parameter vector.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// The input is well formed but an operation's prerequisite does not hold
// (e.g. a path that is too short for the estimators).
class PreconditionError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Kernel family combination without a closed form.
class CapabilityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class PlanError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Non-finite values, divergence, unstable ground truth.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hawkes
