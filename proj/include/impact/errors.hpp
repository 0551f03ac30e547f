#pragma once

#include <stdexcept>
#include <string>

namespace impact {

struct DomainViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsortedInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteGamma : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PolicyNonConvergence : std::runtime_error {
    PolicyNonConvergence(std::size_t step, double residual)
        : std::runtime_error("policy iteration failed to converge at step " +
                             std::to_string(step) +
                             " (residual " + std::to_string(residual) + ")"),
          step(step), residual(residual) {}
    std::size_t step;
    double residual;
};

struct CflViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HypothesisViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaError : std::runtime_error {
    SchemaError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path(std::move(path)) {}
    std::string path;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace impact
