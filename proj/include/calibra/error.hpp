#pragma once

#include <stdexcept>
#include <string>

namespace calibra {

// Argument outside an operation's domain (bad u, mismatched dimensions, ...).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A calibrator could not be fitted on the given data (one class only, degenerate range).
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iterative numerics failed to converge.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid run configuration, score file, or model document.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace calibra
