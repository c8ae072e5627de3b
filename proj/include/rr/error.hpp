// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rr {

enum class ErrorCode {
  kNonMemberElement,
  kInvalidPath,
  kOracleTooLarge,
  kUnknownSymbol,
  kEpsilonCycle,
  kIndexOutOfBounds,
  kParseError,
  kTableShape,
  kMissingWeight,
  kShapeError,
  kNumericalError,
  kNotRational,
  kVocabTooLarge,
  kEmptyCorpus,
  kConfigError,
  kIoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind rather than the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rr
