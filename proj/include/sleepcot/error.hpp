#pragma once

#include <stdexcept>
#include <string>

namespace sleepcot {

enum class ErrorCode {
  EmptySeries,
  SingleInterval,
  InvalidInterval,
  RecordingTooShort,
  DegenerateSpectrum,
  InfeasibleTargets,
  RuleConflict,
  ParseFailure,
  GatewayError,
  BackendUnavailable,
  InvalidResponse,
  UnknownBackend,
  MissingPlaceholder,
  TemplateError,
  InsufficientPool,
  LeakageDetected,
  IoFailure,
  JudgeParseFailure,
  EmptyInput,
  AblationAborted,
  ConfigError,
  UnknownCommand,
  InvalidArgument,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure surfaced by the library carries one of the codes above so
/// callers (and the CLI's structured error output) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sleepcot
