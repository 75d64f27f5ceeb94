#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ontonote/annotation.hpp"
#include "ontonote/ontology.hpp"

namespace ontonote {

enum class Sign { Asserted, Denied };

/// `+c` holds when the classification contains some final descendant of c;
/// `-c` holds when it contains none.
struct Literal {
  Sign sign = Sign::Asserted;
  ConceptId concept_id;
  bool operator==(const Literal&) const = default;
};

/// A named conjunction of literals.
struct Criterion {
  std::string name;
  std::vector<Literal> literals;
  bool operator==(const Criterion&) const = default;
};

/// A disjunction of criteria.
struct Query {
  std::vector<Criterion> criteria;
  bool operator==(const Query&) const = default;
};

/// Conjunction of concepts, each expanded to its final descendants.
struct BasicFilter {
  ConceptSet concepts;
};

/// Throws Validation when the query breaks its structural invariants and
/// UnknownConcept when a literal references a concept missing from `o`.
void validate_query(const Query& q, const Ontology& o);

bool literal_holds(const Literal& lit, const ConceptSet& classification, const Ontology& o);
bool matches(const Query& q, const ConceptSet& classification, const Ontology& o);
Query basic_to_query(const BasicFilter& f);

/// Query with each referenced concept's final-descendant set computed once.
class CompiledQuery {
 public:
  CompiledQuery(const Query& q, const Ontology& o);

  [[nodiscard]] bool matches(const ConceptSet& classification) const;

 private:
  struct CompiledLiteral {
    Sign sign;
    ConceptSet expansion;
  };
  std::vector<std::vector<CompiledLiteral>> criteria_;
};

/// Stable sublist of `annotations` matching `q`.
std::vector<Annotation> filter(const std::vector<Annotation>& annotations, const Query& q,
                               const Ontology& o);

/// Reference evaluator: re-derives every descendant set from the raw tree per
/// literal per annotation. Same contract as filter.
std::vector<Annotation> brute_force_filter(const std::vector<Annotation>& annotations,
                                           const Query& q, const Ontology& o);

// Textual form:
//   query     := criterion (";" criterion)*
//   criterion := [name ":"] literal (WS literal)*
//   literal   := ("+" | "-") concept-path
//   concept-path := name ("/" name)*
Query parse_query(std::string_view text, const Ontology& o);
std::string serialize_query(const Query& q, const Ontology& o);

/// Comma-separated concept paths, as accepted by the basic filter.
BasicFilter parse_concept_list(std::string_view text, const Ontology& o);

/// Resolves a slash path. A path starting at the root name is matched from
/// the root; otherwise it must be the unique tail of some concept's path.
ConceptId resolve_path(const Ontology& o, const std::vector<std::string>& segments);
ConceptId resolve_path(const Ontology& o, std::string_view path);

/// Shortest path suffix that resolves back to `id`.
std::string concept_reference(const Ontology& o, const ConceptId& id);

}  // namespace ontonote
