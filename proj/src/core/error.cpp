#include "blockforge/core/error.hpp"

namespace blockforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::EmptyLayout: return "EmptyLayout";
  case ErrorCode::DegenerateSize: return "DegenerateSize";
  case ErrorCode::TooManyBoxes: return "TooManyBoxes";
  case ErrorCode::BadShape: return "BadShape";
  case ErrorCode::ParseError: return "ParseError";
  case ErrorCode::UnknownCategory: return "UnknownCategory";
  case ErrorCode::BadScheduleParams: return "BadScheduleParams";
  case ErrorCode::EmptyDataset: return "EmptyDataset";
  case ErrorCode::OracleUnavailable: return "OracleUnavailable";
  case ErrorCode::OracleMalformedResponse: return "OracleMalformedResponse";
  case ErrorCode::NoAssetForCategory: return "NoAssetForCategory";
  case ErrorCode::OpeningOutsideWall: return "OpeningOutsideWall";
  case ErrorCode::FrameTooThick: return "FrameTooThick";
  case ErrorCode::TooFewSamples: return "TooFewSamples";
  case ErrorCode::IoError: return "IoError";
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

} // namespace blockforge
