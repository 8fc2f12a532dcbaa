#pragma once

#include <stdexcept>
#include <string>

namespace ppgroup {

/// Bad user input: unreadable files, malformed rows, inconsistent shapes.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: non-convergence, indefinite covariance, degenerate series.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ppgroup
