#pragma once

#include <stdexcept>
#include <string>

namespace actopo {

/// Raised when an input violates an operation's precondition.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical stage runs but cannot meet its contract
/// (non-convergence, residual above tolerance). Carries the best value
/// reached so callers can still report it.
class StageFailure : public std::runtime_error {
public:
    StageFailure(const std::string& what, double best_residual)
        : std::runtime_error(what), best_residual_(best_residual) {}

    double best_residual() const noexcept { return best_residual_; }

private:
    double best_residual_;
};

}  // namespace actopo
