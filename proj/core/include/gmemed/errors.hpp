// errors.hpp — exception types shared across the library

#pragma once

#include <stdexcept>
#include <string>

namespace gmemed {

/// Input violates a documented invariant (malformed system, bad grid, ...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure could not reach its accuracy target
/// (undecayed kernel, unconverged hierarchy, broken sum rule).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gmemed
