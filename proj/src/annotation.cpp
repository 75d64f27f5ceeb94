#include "ontonote/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "ontonote/sanitize.hpp"
#include "ontonote/utf8.hpp"

namespace ontonote {

std::string_view to_string(Role r) { return r == Role::Instructor ? "instructor" : "student"; }

Role role_from_string(std::string_view s) {
  if (s == "instructor") return Role::Instructor;
  if (s == "student") return Role::Student;
  throw Error(ErrorCode::Validation, "role must be 'instructor' or 'student'");
}

std::string_view to_string(ActivityState s) {
  switch (s) {
    case ActivityState::Draft: return "draft";
    case ActivityState::Open: return "open";
    case ActivityState::Closed: return "closed";
  }
  return "draft";
}

ActivityState activity_state_from_string(std::string_view s) {
  if (s == "draft") return ActivityState::Draft;
  if (s == "open") return ActivityState::Open;
  if (s == "closed") return ActivityState::Closed;
  throw Error(ErrorCode::Validation, "activity state must be draft, open or closed");
}

std::size_t Document::text_length() const {
  if (const auto* t = std::get_if<TextBody>(&body)) return utf8::length(t->text);
  return 0;
}

std::size_t Document::page_count() const {
  if (const auto* p = std::get_if<PagedBody>(&body)) return p->pages.size();
  return 0;
}

char LetterMapping::letter_for(double grade) const {
  if (grade >= a) return 'A';
  if (grade >= b) return 'B';
  if (grade >= c) return 'C';
  if (grade >= d) return 'D';
  return 'E';
}

GradeRecord make_grade(std::string activity_id, std::string student_id, double grade,
                       std::optional<char> letter, const LetterMapping& mapping) {
  if (!std::isfinite(grade) || grade < 0.0 || grade > 10.0) {
    throw Error(ErrorCode::InvalidGrade, "grade must lie in [0, 10]");
  }
  if (letter && *letter != mapping.letter_for(grade)) {
    throw Error(ErrorCode::InvalidGrade, std::string("letter '") + *letter +
                                             "' is inconsistent with grade " + std::to_string(grade));
  }
  return GradeRecord{std::move(activity_id), std::move(student_id), grade, letter};
}

void check_document(const Document& d) {
  if (const auto* t = std::get_if<TextBody>(&d.body)) {
    if (t->text.empty()) throw Error(ErrorCode::InvalidDocument, "text document must not be empty");
    return;
  }
  const auto& pages = std::get<PagedBody>(d.body).pages;
  if (pages.empty()) throw Error(ErrorCode::InvalidDocument, "paged document needs at least one page");
  for (const auto& p : pages) {
    if (p.width == 0 || p.height == 0) {
      throw Error(ErrorCode::InvalidDocument, "page dimensions must be positive");
    }
  }
}

void check_anchor(const Document& d, const Anchor& a) {
  if (const auto* span = std::get_if<TextSpan>(&a)) {
    if (!d.is_text()) throw Error(ErrorCode::AnchorOutOfBounds, "text anchor on a paged document");
    const std::size_t len = d.text_length();
    if (span->start >= span->end || span->end > len) {
      throw Error(ErrorCode::AnchorOutOfBounds,
                  "text span [" + std::to_string(span->start) + ", " + std::to_string(span->end) +
                      ") outside document of length " + std::to_string(len));
    }
    return;
  }
  const auto& r = std::get<PageRegion>(a);
  if (d.is_text()) throw Error(ErrorCode::AnchorOutOfBounds, "page anchor on a text document");
  const bool finite = std::isfinite(r.x) && std::isfinite(r.y) && std::isfinite(r.w) && std::isfinite(r.h);
  if (r.page >= d.page_count() || !finite || r.x < 0 || r.y < 0 || r.w <= 0 || r.h <= 0 ||
      r.x + r.w > 1.0 || r.y + r.h > 1.0) {
    throw Error(ErrorCode::AnchorOutOfBounds, "page region outside page " + std::to_string(r.page));
  }
}

void check_classification(const Ontology& o, const ConceptSet& classification) {
  if (classification.empty()) {
    throw Error(ErrorCode::EmptyClassification, "an annotation needs at least one final concept");
  }
  for (const auto& id : classification) {
    const Concept* c = find_concept(o, id);
    if (c == nullptr) throw Error(ErrorCode::UnknownConcept, "unknown concept '" + id.value + "'");
    if (!c->is_final()) {
      throw Error(ErrorCode::NonFinalConcept, "'" + c->name + "' is an intermediate concept");
    }
  }
}

Content sanitize_content(const Content& c) {
  if (c.blocks.empty()) throw Error(ErrorCode::InvalidContent, "content needs at least one block");
  Content out;
  for (const auto& block : c.blocks) {
    if (const auto* rt = std::get_if<RichText>(&block)) {
      out.blocks.emplace_back(RichText{sanitize_html(rt->html)});
    } else if (const auto* m = std::get_if<MediaRef>(&block)) {
      if (!is_allowed_uri(m->uri)) throw Error(ErrorCode::InvalidContent, "media URI must be http(s)");
      out.blocks.emplace_back(*m);
    } else {
      const auto& l = std::get<Link>(block);
      if (!is_allowed_uri(l.uri)) throw Error(ErrorCode::InvalidContent, "link URI must be http(s)");
      out.blocks.emplace_back(l);
    }
  }
  return out;
}

std::vector<Violation> validate_annotation(const Activity& activity, const Document& document,
                                           const Group& group, const Annotation& annotation) {
  std::vector<Violation> out;
  auto record = [&](auto&& check) {
    try {
      check();
    } catch (const Error& e) {
      out.push_back({e.code(), e.what()});
    }
  };
  if (annotation.activity_id != activity.id) {
    out.push_back({ErrorCode::Validation, "annotation belongs to another activity"});
  }
  if (group.members.count(annotation.author) == 0) {
    out.push_back({ErrorCode::AuthorNotInGroup, "author '" + annotation.author + "' is not in the group"});
  }
  record([&] { check_anchor(document, annotation.anchor); });
  record([&] { sanitize_content(annotation.content); });
  if (annotation.classification.empty()) {
    out.push_back({ErrorCode::EmptyClassification, "an annotation needs at least one final concept"});
  }
  for (const auto& id : annotation.classification) {
    record([&] { check_classification(activity.snapshot, ConceptSet{id}); });
  }
  return out;
}

Activity make_activity(std::string id, std::string title, const Document& document, const Group& group,
                       const Ontology& source, std::string owner) {
  try {
    validate(source);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidOntology, e.what());
  }
  Activity a;
  a.snapshot = snapshot(source, id);
  a.id = std::move(id);
  a.title = std::move(title);
  a.document_id = document.id;
  a.group_id = group.id;
  a.owner = std::move(owner);
  a.source_ontology_id = source.id;
  a.state = ActivityState::Draft;
  return a;
}

Activity transition(const Activity& a, ActivityState to, const Group& group) {
  const bool allowed = (a.state == ActivityState::Draft && to == ActivityState::Open) ||
                       (a.state == ActivityState::Open && to == ActivityState::Closed);
  if (!allowed) {
    throw Error(ErrorCode::InvalidStateTransition, "cannot move activity from " +
                                                       std::string(to_string(a.state)) + " to " +
                                                       std::string(to_string(to)));
  }
  if (to == ActivityState::Open && group.members.empty()) {
    throw Error(ErrorCode::EmptyGroup, "cannot open an activity whose group has no members");
  }
  Activity next = a;
  next.state = to;
  return next;
}

namespace {

auto anchor_key(const Anchor& a) {
  if (const auto* s = std::get_if<TextSpan>(&a)) {
    return std::make_tuple(0, s->start, 0.0, 0.0, 0.0, 0.0);
  }
  const auto& r = std::get<PageRegion>(a);
  return std::make_tuple(1, r.page, r.x, r.y, r.w, r.h);
}

}  // namespace

bool listing_before(const Annotation& a, const Annotation& b) {
  const auto ka = anchor_key(a.anchor);
  const auto kb = anchor_key(b.anchor);
  if (ka != kb) return ka < kb;
  if (a.created != b.created) return a.created < b.created;
  return a.id < b.id;
}

void sort_for_listing(std::vector<Annotation>& annotations) {
  std::stable_sort(annotations.begin(), annotations.end(), listing_before);
}

ConceptSet concept_usage(const std::vector<Annotation>& annotations) {
  ConceptSet out;
  for (const auto& a : annotations) out.insert(a.classification.begin(), a.classification.end());
  return out;
}

}  // namespace ontonote
