#pragma once

#include <stdexcept>
#include <string>

namespace distscale {

enum class ErrorCode {
    InvalidInput,
    DegenerateSystem,
    InfeasibleTarget,
    PiEvaluation,
    UndefinedCorrelation,
    UndefinedR2,
    DistortionUndefined,
    ReferenceSelection,
    SingularMechanism,
    TrainingDiverged,
    DegenerateSplit,
    InvalidFeature,
    SchemaMismatch,
    NoValidSet,
    Overflow,
    Io,
    Parse,
    Internal,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above; the C
/// API maps them onto its status enum and the CLI onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace distscale
