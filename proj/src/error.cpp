#include "ontonote/error.hpp"

namespace ontonote {

namespace {

struct CodeInfo {
  ErrorCode code;
  std::string_view name;
  int status;
};

constexpr CodeInfo kCodes[] = {
    {ErrorCode::ParseError, "PARSE_ERROR", 400},
    {ErrorCode::UnknownConcept, "UNKNOWN_CONCEPT", 422},
    {ErrorCode::AmbiguousConcept, "AMBIGUOUS_CONCEPT", 422},
    {ErrorCode::DuplicateSibling, "DUPLICATE_SIBLING", 422},
    {ErrorCode::Cycle, "CYCLE", 422},
    {ErrorCode::DeleteRoot, "DELETE_ROOT", 422},
    {ErrorCode::InUse, "IN_USE", 422},
    {ErrorCode::NotExtensible, "NOT_EXTENSIBLE", 422},
    {ErrorCode::InvalidEdit, "INVALID_EDIT", 422},
    {ErrorCode::InvalidName, "INVALID_NAME", 422},
    {ErrorCode::InvalidOntology, "INVALID_ONTOLOGY", 422},
    {ErrorCode::EmptyClassification, "EMPTY_CLASSIFICATION", 422},
    {ErrorCode::NonFinalConcept, "NON_FINAL_CONCEPT", 422},
    {ErrorCode::AnchorOutOfBounds, "ANCHOR_OUT_OF_BOUNDS", 422},
    {ErrorCode::AuthorNotInGroup, "AUTHOR_NOT_IN_GROUP", 403},
    {ErrorCode::ActivityNotOpen, "ACTIVITY_NOT_OPEN", 422},
    {ErrorCode::InvalidContent, "INVALID_CONTENT", 422},
    {ErrorCode::InvalidDocument, "INVALID_DOCUMENT", 422},
    {ErrorCode::UnknownDocument, "UNKNOWN_DOCUMENT", 422},
    {ErrorCode::UnknownGroup, "UNKNOWN_GROUP", 422},
    {ErrorCode::UnknownOntology, "UNKNOWN_ONTOLOGY", 422},
    {ErrorCode::UnknownActivity, "UNKNOWN_ACTIVITY", 404},
    {ErrorCode::UnknownUser, "UNKNOWN_USER", 422},
    {ErrorCode::EmptyGroup, "EMPTY_GROUP", 422},
    {ErrorCode::InvalidStateTransition, "INVALID_STATE_TRANSITION", 409},
    {ErrorCode::InvalidGrade, "INVALID_GRADE", 422},
    {ErrorCode::EmptySample, "EMPTY_SAMPLE", 422},
    {ErrorCode::NonpositiveWidth, "NONPOSITIVE_WIDTH", 422},
    {ErrorCode::EmptyIntersection, "EMPTY_INTERSECTION", 422},
    {ErrorCode::AllZeroDiffs, "ALL_ZERO_DIFFS", 422},
    {ErrorCode::Conflict, "CONFLICT", 409},
    {ErrorCode::NotFound, "NOT_FOUND", 404},
    {ErrorCode::AlreadyExists, "ALREADY_EXISTS", 409},
    {ErrorCode::Validation, "VALIDATION", 422},
    {ErrorCode::CorruptArchive, "CORRUPT_ARCHIVE", 422},
    {ErrorCode::IoError, "IO_ERROR", 500},
    {ErrorCode::Unauthorized, "UNAUTHORIZED", 401},
    {ErrorCode::Forbidden, "FORBIDDEN", 403},
    {ErrorCode::BadRequest, "BAD_REQUEST", 400},
    {ErrorCode::Internal, "INTERNAL", 500},
};

const CodeInfo& info(ErrorCode code) {
  for (const auto& c : kCodes) {
    if (c.code == code) return c;
  }
  return kCodes[0];
}

}  // namespace

std::string_view to_string(ErrorCode code) { return info(code).name; }

int http_status(ErrorCode code) { return info(code).status; }

const std::vector<ErrorCode>& all_error_codes() {
  static const std::vector<ErrorCode> codes = [] {
    std::vector<ErrorCode> v;
    for (const auto& c : kCodes) v.push_back(c.code);
    return v;
  }();
  return codes;
}

}  // namespace ontonote
