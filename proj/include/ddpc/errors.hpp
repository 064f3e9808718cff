#pragma once

#include <stdexcept>
#include <string>

namespace ddpc {

// Bad arguments: non-finite entries, mismatched dimensions, asymmetric
// weights, and the like.
class InvalidInputError : public std::invalid_argument {
public:
    explicit InvalidInputError(const std::string& what) : std::invalid_argument(what) {}
};

// Simulation blow-up (|y| beyond the divergence guard).
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// A controller problem admits no feasible point (unreachable past window,
// conflicting constraint boxes, inconsistent range constraints).
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// A solver was called outside its stated preconditions.
class PreconditionError : public std::runtime_error {
public:
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed dataset file; carries a 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

} // namespace ddpc
