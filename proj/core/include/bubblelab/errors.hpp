#pragma once

#include <stdexcept>
#include <string>

namespace bubblelab {

/// Evaluation or integration outside the region where an object is defined.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid parameters or configuration (violated preconditions).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Geometric admissibility violations (neck windows, overlapping holes, empty boundary sets).
class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure: non-bracketing intervals, divergent quadratures, singular kernels.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bubblelab
