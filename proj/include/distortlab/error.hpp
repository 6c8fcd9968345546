#pragma once

#include <stdexcept>
#include <string>

namespace distortlab {

/// Input violates a documented precondition (non-finite entries, bad sizes, ...).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input is well-formed but numerically degenerate (rank deficiency, coincident points).
class DegenerateInput : public std::runtime_error {
public:
    DegenerateInput(const std::string& what, double measure)
        : std::runtime_error(what), measure_(measure) {}

    /// The quantity that triggered the failure, e.g. the smallest singular value.
    double measure() const noexcept { return measure_; }

private:
    double measure_;
};

/// A map or field produced a non-finite value at some point.
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace distortlab
