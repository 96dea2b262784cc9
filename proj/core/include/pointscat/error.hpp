#pragma once

#include <stdexcept>
#include <string>

namespace pointscat {

// Raised when a configuration or input file cannot be parsed or is out of range.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised by the solvers (truncation insufficient, smoothness budget exhausted, ...).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace pointscat
