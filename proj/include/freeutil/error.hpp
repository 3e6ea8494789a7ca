#ifndef FREEUTIL_ERROR_HPP
#define FREEUTIL_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace freeutil {

enum class ErrorCode {
  NegativeProbability,
  NotNormalized,
  DuplicateLabel,
  NonFinite,
  SupportMismatch,
  LabelMismatch,
  DomainError,
  EmptySupport,
  UnknownAction,
  UnsupportedRegime,
  InvalidTemperature,
  CyclicTree,
  UnknownTemperatureTag,
  TooManyOutcomes,
  TooLarge,
  TooManyPaths,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NegativeProbability: return "NegativeProbability";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::UnknownAction: return "UnknownAction";
    case ErrorCode::UnsupportedRegime: return "UnsupportedRegime";
    case ErrorCode::InvalidTemperature: return "InvalidTemperature";
    case ErrorCode::CyclicTree: return "CyclicTree";
    case ErrorCode::UnknownTemperatureTag: return "UnknownTemperatureTag";
    case ErrorCode::TooManyOutcomes: return "TooManyOutcomes";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::TooManyPaths: return "TooManyPaths";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Every failure in the library is reported through this exception. The
/// message always starts with the error code name so that command-line
/// diagnostics can be matched textually.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace freeutil

#endif  // FREEUTIL_ERROR_HPP
