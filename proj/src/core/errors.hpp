#pragma once

#include <stdexcept>
#include <string>

namespace frugal {

// Bad argument values: shapes, ranks, out-of-range hyperparameters.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Non-finite or otherwise corrupt numeric input.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration (unknown keys, bad enums, missing fields).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Trajectory escaped the divergence guard.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

}  // namespace frugal
