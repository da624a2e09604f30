#include "kslab/error.hpp"

namespace kslab {

const char* error_name(ErrorCode c)
{
    switch (c) {
    case ErrorCode::NotOnBoundary: return "NotOnBoundary";
    case ErrorCode::ZeroVelocity: return "ZeroVelocity";
    case ErrorCode::DegenerateGrazing: return "DegenerateGrazing";
    case ErrorCode::CoincidentVelocities: return "CoincidentVelocities";
    case ErrorCode::ThetaOutOfRange: return "ThetaOutOfRange";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::GridAsymmetry: return "GridAsymmetry";
    case ErrorCode::ChainCapExceeded: return "ChainCapExceeded";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::NonFiniteWeight: return "NonFiniteWeight";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NonPositiveNorm: return "NonPositiveNorm";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::MissingSnapshots: return "MissingSnapshots";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::UnknownSubcommand: return "UnknownSubcommand";
    case ErrorCode::IOError: return "IOError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Error";
}

} // namespace kslab
