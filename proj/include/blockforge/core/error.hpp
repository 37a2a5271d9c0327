#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blockforge {

enum class ErrorCode {
  EmptyLayout,
  DegenerateSize,
  TooManyBoxes,
  BadShape,
  ParseError,
  UnknownCategory,
  BadScheduleParams,
  EmptyDataset,
  OracleUnavailable,
  OracleMalformedResponse,
  NoAssetForCategory,
  OpeningOutsideWall,
  FrameTooThick,
  TooFewSamples,
  IoError,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

} // namespace blockforge
