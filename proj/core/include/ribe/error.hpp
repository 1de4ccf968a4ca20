#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ribe {

enum class ErrorCode {
    InvalidArgument,
    NegativeMass,
    RowSumMismatch,
    DimensionMismatch,
    ShapeMismatch,
    LPInfeasible,
    InvalidRadius,
    SolverFailure,
    EmptyCounts,
    InfeasibleConstraint,
    InfeasibleCaps,
    SupportMismatch,
    InvalidConstants,
    ZeroProbability,
    InfeasibleBounds,
    BoundViolated,
    DegenerateGap,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace ribe
