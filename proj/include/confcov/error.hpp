#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace confcov {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  RowCountTooSmall,
  NumericalFailure,
  DegenerateRank,
  SubsampleTooSmall,
  SubsampleNotHighDimensional,
  InvalidSubsampleCount,
  InvalidSpectrumMap,
  EllOutOfRange,
  KmaxOutOfRange,
  IndivisibleDimension,
  SingularConstruction,
  ZeroVariance,
  RTooLarge,
  NotConverged,
  SingularGram,
  TooLargeForExhaustive,
  ConfigInvalid,
  ParseError,
  ShapeError,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RowCountTooSmall: return "RowCountTooSmall";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::DegenerateRank: return "DegenerateRank";
    case ErrorCode::SubsampleTooSmall: return "SubsampleTooSmall";
    case ErrorCode::SubsampleNotHighDimensional: return "SubsampleNotHighDimensional";
    case ErrorCode::InvalidSubsampleCount: return "InvalidSubsampleCount";
    case ErrorCode::InvalidSpectrumMap: return "InvalidSpectrumMap";
    case ErrorCode::EllOutOfRange: return "EllOutOfRange";
    case ErrorCode::KmaxOutOfRange: return "KmaxOutOfRange";
    case ErrorCode::IndivisibleDimension: return "IndivisibleDimension";
    case ErrorCode::SingularConstruction: return "SingularConstruction";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::RTooLarge: return "RTooLarge";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::TooLargeForExhaustive: return "TooLargeForExhaustive";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception carrying a machine-checkable code. what() is "<Code>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace detail
}  // namespace confcov
