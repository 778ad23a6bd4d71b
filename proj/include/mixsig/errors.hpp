#pragma once

#include <stdexcept>
#include <string>

namespace mixsig {

// Bad caller input: dimension mismatches, malformed options, unreadable files.
// The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown: non-PD covariance where one is required, zero-variance
// statistics, infeasible rejection sampling, and similar. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mixsig
