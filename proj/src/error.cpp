// SPDX-License-Identifier: Apache-2.0
#include "rr/error.hpp"

namespace rr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonMemberElement: return "NonMemberElement";
    case ErrorCode::kInvalidPath: return "InvalidPath";
    case ErrorCode::kOracleTooLarge: return "OracleTooLarge";
    case ErrorCode::kUnknownSymbol: return "UnknownSymbol";
    case ErrorCode::kEpsilonCycle: return "EpsilonCycle";
    case ErrorCode::kIndexOutOfBounds: return "IndexOutOfBounds";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kTableShape: return "TableShape";
    case ErrorCode::kMissingWeight: return "MissingWeight";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kNumericalError: return "NumericalError";
    case ErrorCode::kNotRational: return "NotRational";
    case ErrorCode::kVocabTooLarge: return "VocabTooLarge";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace rr
