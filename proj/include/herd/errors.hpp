#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace herd {

/// Input violates a model assumption or a type invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An exponent left the representable double range.
class RangeError : public std::range_error {
public:
    using std::range_error::range_error;
};

/// An iterative method exhausted its budget without meeting its tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double last_iterate)
        : std::runtime_error(what), last_iterate_(last_iterate) {}

    double last_iterate() const noexcept { return last_iterate_; }

private:
    double last_iterate_;
};

namespace detail {

// Largest exponent we are willing to hand to std::exp.
inline constexpr double kMaxExponent = 700.0;

inline double checked_exp(double exponent, const char* what) {
    if (!(exponent <= kMaxExponent && exponent >= -kMaxExponent)) {
        throw RangeError(std::string(what) + ": exponent " + std::to_string(exponent) +
                         " outside [-700, 700]");
    }
    return std::exp(exponent);
}

}  // namespace detail
}  // namespace herd
