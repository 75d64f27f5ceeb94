#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ontonote {

/// Opaque concept identifier, unique within one ontology history.
struct ConceptId {
  std::string value;

  ConceptId() = default;
  explicit ConceptId(std::string v) : value(std::move(v)) {}

  // Shorter ids first, so c2 < c10.
  std::strong_ordering operator<=>(const ConceptId& o) const {
    if (const auto c = value.size() <=> o.value.size(); c != 0) return c;
    return value <=> o.value;
  }
  bool operator==(const ConceptId&) const = default;
};

using ConceptSet = std::set<ConceptId>;

struct Provenance {
  enum class Kind { Instructor, Student };
  Kind kind = Kind::Instructor;
  std::string author;     // student id, empty for instructor concepts
  std::string timestamp;  // ISO-8601 UTC, empty for instructor concepts

  bool operator==(const Provenance&) const = default;
  [[nodiscard]] bool is_student() const { return kind == Kind::Student; }
};

/// A node of the concept taxonomy. Leaves are final concepts (usable for
/// classification); nodes with children, or flagged extensible, are
/// intermediate.
struct Concept {
  ConceptId id;
  std::string name;
  std::vector<Concept> children;
  bool extensible = false;
  Provenance provenance;

  [[nodiscard]] bool is_final() const { return children.empty() && !extensible; }
  [[nodiscard]] bool is_intermediate() const { return !is_final(); }

  bool operator==(const Concept&) const = default;
};

enum class Visibility { Private, Public };

std::string_view to_string(Visibility v);
Visibility visibility_from_string(std::string_view s);

struct Ontology {
  std::string id;
  std::string owner;
  Visibility visibility = Visibility::Private;
  std::uint64_t revision = 0;
  Concept root;
  // Next numeric suffix handed out for a fresh ConceptId; never decreases,
  // so ids of deleted concepts are never reissued.
  std::uint64_t next_concept = 1;

  bool operator==(const Ontology&) const = default;
};

namespace edit {
struct Rename {
  ConceptId target;
  std::string name;
};
struct AddChild {
  ConceptId parent;
  std::string name;
  bool extensible = false;
};
struct Delete {
  ConceptId target;
};
struct Move {
  ConceptId target;
  ConceptId new_parent;
  std::size_t position = 0;
};
struct SetExtensible {
  ConceptId target;
  bool flag = false;
};
}  // namespace edit

using EditOp = std::variant<edit::Rename, edit::AddChild, edit::Delete,
                            edit::Move, edit::SetExtensible>;

struct OntologyMetrics {
  std::size_t concepts = 0;
  std::size_t intermediates = 0;
  std::size_t finals = 0;
  std::size_t depth = 0;  // number of levels; a single root has depth 1
  std::size_t intermediate_children = 0;

  /// Average number of direct subconcepts per intermediate concept, absent
  /// when there are no intermediates.
  [[nodiscard]] std::optional<double> average_branching() const {
    if (intermediates == 0) return std::nullopt;
    return static_cast<double>(intermediate_children) /
           static_cast<double>(intermediates);
  }
};

// Bracket notation.
Ontology parse_bracket(std::string_view text);
std::string serialize_bracket(const Ontology& o);
std::string serialize_bracket(const Concept& c);
std::string quote_name_if_needed(std::string_view name);

// Lookup.
const Concept* find_concept(const Ontology& o, const ConceptId& id);
const Concept& get_concept(const Ontology& o, const ConceptId& id);
const Concept* parent_of(const Ontology& o, const ConceptId& id);
std::vector<std::string> concept_path(const Ontology& o, const ConceptId& id);
std::vector<const Concept*> all_concepts(const Ontology& o);
ConceptSet finals(const Ontology& o);
ConceptSet intermediates(const Ontology& o);

/// {c} for a final concept, otherwise every final concept in c's subtree.
ConceptSet final_descendants(const Ontology& o, const ConceptId& c);

OntologyMetrics metrics(const Ontology& o);

/// Throws InvalidOntology when the tree breaks an invariant (duplicate ids,
/// duplicate sibling names, empty names, misplaced student concepts).
void validate(const Ontology& o);

/// Applies one edit, returning a new ontology at revision + 1. `usage` is the
/// set of concepts currently referenced by annotation classifications.
Ontology apply_edit(const Ontology& o, const EditOp& op, const ConceptSet& usage);

/// Adds a student-proposed final concept under an extensible intermediate.
Ontology propose_final(const Ontology& o, const ConceptId& parent,
                       std::string_view name, std::string_view author,
                       std::string_view timestamp);

/// Deep copy for a new activity: same concept ids, revision reset to 0.
Ontology snapshot(const Ontology& o, std::string id);

/// Structural equality ignoring ConceptIds and provenance.
bool same_shape(const Concept& a, const Concept& b);

}  // namespace ontonote
