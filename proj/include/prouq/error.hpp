#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prouq {

// Input that breaks a data-model invariant (bad logprob, empty references, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed JSONL; line numbers are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string & what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Invalid estimator / search / generator parameters.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// AUROC needs at least one sample of each class.
class UndefinedAurocError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Top-1 answer or references carry no scorable tokens.
class LabelingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace prouq
