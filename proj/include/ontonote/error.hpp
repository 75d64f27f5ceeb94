#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ontonote {

/// Stable machine codes for every failure the library can report. The
/// string form (see to_string) is part of the HTTP contract and must not
/// change between releases.
enum class ErrorCode {
  ParseError,
  UnknownConcept,
  AmbiguousConcept,
  DuplicateSibling,
  Cycle,
  DeleteRoot,
  InUse,
  NotExtensible,
  InvalidEdit,
  InvalidName,
  InvalidOntology,
  EmptyClassification,
  NonFinalConcept,
  AnchorOutOfBounds,
  AuthorNotInGroup,
  ActivityNotOpen,
  InvalidContent,
  InvalidDocument,
  UnknownDocument,
  UnknownGroup,
  UnknownOntology,
  UnknownActivity,
  UnknownUser,
  EmptyGroup,
  InvalidStateTransition,
  InvalidGrade,
  EmptySample,
  NonpositiveWidth,
  EmptyIntersection,
  AllZeroDiffs,
  Conflict,
  NotFound,
  AlreadyExists,
  Validation,
  CorruptArchive,
  IoError,
  Unauthorized,
  Forbidden,
  BadRequest,
  Internal,
};

std::string_view to_string(ErrorCode code);
int http_status(ErrorCode code);
const std::vector<ErrorCode>& all_error_codes();

/// Position inside a parsed text, 1-based line and column (columns count
/// Unicode scalar values, not bytes).
struct TextPosition {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t offset = 0;  // 0-based codepoint offset into the input
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(ErrorCode code, const std::string& message, TextPosition pos)
      : std::runtime_error(message), code_(code), position_(pos) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::optional<TextPosition>& position() const noexcept {
    return position_;
  }

 private:
  ErrorCode code_;
  std::optional<TextPosition> position_;
};

}  // namespace ontonote
