#pragma once

#include <stdexcept>
#include <string>

namespace dotrom {

// Bad input: config fields, layouts, dimensions, parameter files.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Linear-solver breakdown, non-convergence or a singular reduced system.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File system and container format problems.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dotrom
