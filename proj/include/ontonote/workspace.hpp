#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ontonote/annotation.hpp"
#include "ontonote/clock.hpp"
#include "ontonote/ontology.hpp"
#include "ontonote/store.hpp"

namespace ontonote {

struct AnnotationPatch {
  std::optional<Anchor> anchor;
  std::optional<Content> content;
  std::optional<ConceptSet> classification;
};

/// Domain operations on top of a Store. Enforces the annotation, activity
/// and ontology invariants on every write; role checks belong to callers.
class Workspace {
 public:
  explicit Workspace(Store& store, Clock clock = utc_now);

  [[nodiscard]] Store& store() noexcept { return store_; }

  User add_user(const User& u);
  [[nodiscard]] User get_user(const std::string& id) const;
  [[nodiscard]] std::optional<User> find_user_by_token(std::string_view token) const;

  /// Members must be existing students.
  Group create_group(std::string name, const std::set<std::string>& members);
  [[nodiscard]] Group get_group(const std::string& id) const;

  Document add_document(Document d);
  [[nodiscard]] Document get_document(const std::string& id) const;

  Ontology create_ontology(std::string_view bracket, const std::string& owner, Visibility visibility);
  [[nodiscard]] Ontology get_ontology(const std::string& id) const;
  /// Applies `ops` in order as one atomic batch; `expected_revision` is the
  /// ontology revision the caller last saw. Appends the ops to the edit log.
  Ontology edit_ontology(const std::string& id, std::uint64_t expected_revision, const std::vector<EditOp>& ops);

  Activity create_activity(std::string title, const std::string& document_id, const std::string& group_id,
                           const std::string& ontology_id, const std::string& owner);
  [[nodiscard]] Activity get_activity(const std::string& id) const;
  Activity set_state(const std::string& id, ActivityState state);
  Activity set_group_visibility(const std::string& id, bool visible);
  /// Snapshot edits; usage protection comes from the activity's annotations.
  Activity edit_snapshot(const std::string& id, std::uint64_t expected_revision, const std::vector<EditOp>& ops);
  Activity propose_concept(const std::string& id, const ConceptId& parent, std::string_view name,
                           const std::string& author);

  Annotation add_annotation(const std::string& activity_id, const std::string& author, const Anchor& anchor,
                            const Content& content, const ConceptSet& classification);
  Annotation update_annotation(const std::string& annotation_id, const std::string& actor,
                               std::optional<std::uint64_t> expected_revision, const AnnotationPatch& patch);
  [[nodiscard]] Annotation get_annotation(const std::string& id) const;
  [[nodiscard]] std::vector<Annotation> list_annotations(const std::string& activity_id,
                                                         const std::optional<std::string>& author = {}) const;
  [[nodiscard]] std::vector<Violation> validate_annotation(const Annotation& a) const;

  GradeRecord set_grade(const std::string& activity_id, const std::string& student_id, double grade,
                        std::optional<char> letter = {});
  [[nodiscard]] std::vector<GradeRecord> grades(const std::string& activity_id) const;

  /// Single JSON document with the activity, its document, group (and member
  /// users without tokens), annotations, grades and snapshot edit log.
  [[nodiscard]] std::string export_archive(const std::string& activity_id) const;
  Activity import_archive(std::string_view bytes);

 private:
  Activity write_activity(const Envelope& current, const Activity& next);

  Store& store_;
  Clock clock_;
};

}  // namespace ontonote
