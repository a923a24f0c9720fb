#pragma once

#include <stdexcept>
#include <string>

namespace interpkit {

// Bad input values: nonpositive grid bounds, dimension mismatch, etc.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A requested path exists in the API but not for these inputs
// (oracle on a large instance, mixed-norm operator norms, ...).
class Unsupported : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Near-optimal selector could not certify cost <= factor * lower bound.
class CertificationError : public NumericalError {
public:
    CertificationError(const std::string& what, double cost, double bound)
        : NumericalError(what), cost_(cost), bound_(bound) {}

    double cost() const noexcept { return cost_; }
    double bound() const noexcept { return bound_; }

private:
    double cost_;
    double bound_;
};

} // namespace interpkit
