#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "ontonote/error.hpp"
#include "ontonote/ontology.hpp"

namespace ontonote {

enum class Role { Instructor, Student };

std::string_view to_string(Role r);
Role role_from_string(std::string_view s);

struct User {
  std::string id;
  std::string display_name;
  Role role = Role::Student;
  std::string token;  // static bearer token; never exported in archives
};

struct Group {
  std::string id;
  std::string name;
  std::set<std::string> members;
};

struct Page {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::string image;
};

struct TextBody {
  std::string text;  // UTF-8
};

struct PagedBody {
  std::vector<Page> pages;
};

struct Document {
  std::string id;
  std::string title;
  // Empty for local uploads; otherwise the remote reference it was imported from.
  std::optional<std::string> remote_uri;
  std::variant<TextBody, PagedBody> body;

  /// Number of Unicode scalar values of a text body; 0 for paged documents.
  [[nodiscard]] std::size_t text_length() const;
  [[nodiscard]] std::size_t page_count() const;
  [[nodiscard]] bool is_text() const { return std::holds_alternative<TextBody>(body); }
};

/// Half-open codepoint range [start, end).
struct TextSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const TextSpan&) const = default;
};

/// Normalized rectangle on one page of a paged document.
struct PageRegion {
  std::size_t page = 0;
  double x = 0, y = 0, w = 0, h = 0;
  bool operator==(const PageRegion&) const = default;
};

using Anchor = std::variant<TextSpan, PageRegion>;

enum class MediaKind { Image, Audio, Video };

struct RichText {
  std::string html;
};
struct MediaRef {
  MediaKind kind = MediaKind::Image;
  std::string uri;
};
struct Link {
  std::string uri;
  std::string label;
};

using ContentBlock = std::variant<RichText, MediaRef, Link>;

struct Content {
  std::vector<ContentBlock> blocks;
};

struct Annotation {
  std::string id;
  std::string activity_id;
  std::string author;
  Anchor anchor;
  Content content;
  ConceptSet classification;
  std::string created;  // ISO-8601 UTC
  std::string updated;
  std::uint64_t revision = 0;
};

enum class ActivityState { Draft, Open, Closed };

std::string_view to_string(ActivityState s);
ActivityState activity_state_from_string(std::string_view s);

struct Activity {
  std::string id;
  std::string title;
  std::string document_id;
  std::string group_id;
  std::string owner;
  std::string source_ontology_id;
  Ontology snapshot;
  ActivityState state = ActivityState::Draft;
  // Whether students see each other's annotations while the activity runs.
  bool annotations_visible_to_group = true;
};

/// Numeric grade to letter category. Defaults: A >= 9, B >= 7, C >= 5,
/// D >= 3, otherwise E.
struct LetterMapping {
  double a = 9.0;
  double b = 7.0;
  double c = 5.0;
  double d = 3.0;

  [[nodiscard]] char letter_for(double grade) const;
};

struct GradeRecord {
  std::string activity_id;
  std::string student_id;
  double grade = 0.0;
  std::optional<char> letter;
};

GradeRecord make_grade(std::string activity_id, std::string student_id, double grade,
                       std::optional<char> letter, const LetterMapping& mapping = {});

struct Violation {
  ErrorCode code;
  std::string message;
};

void check_document(const Document& d);
void check_anchor(const Document& d, const Anchor& a);
void check_classification(const Ontology& o, const ConceptSet& classification);

/// Sanitizes every rich-text block and checks media/link URIs. Throws
/// InvalidContent for an empty content or a disallowed URI.
Content sanitize_content(const Content& c);

/// Every invariant the annotation currently violates; empty when valid.
std::vector<Violation> validate_annotation(const Activity& activity, const Document& document,
                                           const Group& group, const Annotation& annotation);

/// Draft activity with a deep-copied ontology snapshot.
Activity make_activity(std::string id, std::string title, const Document& document,
                       const Group& group, const Ontology& source, std::string owner);

/// draft -> open (requires a non-empty group of students) -> closed.
Activity transition(const Activity& a, ActivityState to, const Group& group);

/// Listing order: anchor position, then creation time, then id.
bool listing_before(const Annotation& a, const Annotation& b);
void sort_for_listing(std::vector<Annotation>& annotations);

/// Union of all classifications; the `usage` argument of apply_edit.
ConceptSet concept_usage(const std::vector<Annotation>& annotations);

}  // namespace ontonote
