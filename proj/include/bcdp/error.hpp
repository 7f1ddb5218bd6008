#pragma once

#include <stdexcept>
#include <string>

namespace bcdp {

/// Shapes or dimensions that do not fit together (a programming error on the caller's side).
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Well-formed input whose contents violate a documented invariant.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input. Carries the 1-based line number that failed.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// The planner found no route from the queried cell to the goal.
class NoPathError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace bcdp
