#include "sleepcot/error.hpp"

namespace sleepcot {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::SingleInterval: return "SingleInterval";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::RecordingTooShort: return "RecordingTooShort";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::InfeasibleTargets: return "InfeasibleTargets";
    case ErrorCode::RuleConflict: return "RuleConflict";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::GatewayError: return "GatewayError";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::InvalidResponse: return "InvalidResponse";
    case ErrorCode::UnknownBackend: return "UnknownBackend";
    case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::TemplateError: return "TemplateError";
    case ErrorCode::InsufficientPool: return "InsufficientPool";
    case ErrorCode::LeakageDetected: return "LeakageDetected";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::JudgeParseFailure: return "JudgeParseFailure";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::AblationAborted: return "AblationAborted";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace sleepcot
