#pragma once

#include <stdexcept>
#include <string>

namespace memdrop {

/// Caller violated an operation's precondition (bad dimension, ε out of range, ...).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file (embedding file, KB csv, snapshot, config).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Experiment config problem; `key()` names the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace memdrop
