#pragma once

#include <stdexcept>
#include <string>

namespace kslab {

enum class ErrorCode {
    NotOnBoundary,
    ZeroVelocity,
    DegenerateGrazing,
    CoincidentVelocities,
    ThetaOutOfRange,
    GridMismatch,
    GridAsymmetry,
    ChainCapExceeded,
    TimeOutOfRange,
    NonFiniteWeight,
    CFLViolation,
    NonFinite,
    DivergenceDetected,
    IndexOutOfRange,
    NonPositiveNorm,
    WindowTooSmall,
    MissingSnapshots,
    ParseError,
    ValidationError,
    UnknownSubcommand,
    IOError,
    InvalidArgument,
};

const char* error_name(ErrorCode c);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(error_name(code)) + ": " + msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace kslab
