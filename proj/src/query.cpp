#include "ontonote/query.hpp"

#include <algorithm>
#include <set>

#include "ontonote/error.hpp"

namespace ontonote {

namespace {

bool intersects(const ConceptSet& classification, const ConceptSet& expansion) {
  return std::any_of(classification.begin(), classification.end(),
                     [&](const ConceptId& id) { return expansion.count(id) != 0; });
}

}  // namespace

void validate_query(const Query& q, const Ontology& o) {
  if (q.criteria.empty()) throw Error(ErrorCode::Validation, "a query needs at least one criterion");
  std::set<std::string> names;
  for (const auto& c : q.criteria) {
    if (c.literals.empty()) {
      throw Error(ErrorCode::Validation, "criterion '" + c.name + "' needs at least one literal");
    }
    if (!c.name.empty() && !names.insert(c.name).second) {
      throw Error(ErrorCode::Validation, "duplicate criterion name '" + c.name + "'");
    }
    std::set<std::pair<Sign, ConceptId>> seen;
    for (const auto& lit : c.literals) {
      if (find_concept(o, lit.concept_id) == nullptr) {
        throw Error(ErrorCode::UnknownConcept, "unknown concept '" + lit.concept_id.value + "'");
      }
      if (!seen.insert({lit.sign, lit.concept_id}).second) {
        throw Error(ErrorCode::Validation, "duplicate literal in criterion '" + c.name + "'");
      }
    }
  }
}

bool literal_holds(const Literal& lit, const ConceptSet& classification, const Ontology& o) {
  const bool hit = intersects(classification, final_descendants(o, lit.concept_id));
  return lit.sign == Sign::Asserted ? hit : !hit;
}

bool matches(const Query& q, const ConceptSet& classification, const Ontology& o) {
  return CompiledQuery(q, o).matches(classification);
}

Query basic_to_query(const BasicFilter& f) {
  Criterion c;
  for (const auto& id : f.concepts) c.literals.push_back(Literal{Sign::Asserted, id});
  return Query{{std::move(c)}};
}

CompiledQuery::CompiledQuery(const Query& q, const Ontology& o) {
  validate_query(q, o);
  criteria_.reserve(q.criteria.size());
  for (const auto& c : q.criteria) {
    auto& compiled = criteria_.emplace_back();
    for (const auto& lit : c.literals) {
      compiled.push_back({lit.sign, final_descendants(o, lit.concept_id)});
    }
  }
}

bool CompiledQuery::matches(const ConceptSet& classification) const {
  return std::any_of(criteria_.begin(), criteria_.end(), [&](const auto& literals) {
    return std::all_of(literals.begin(), literals.end(), [&](const CompiledLiteral& lit) {
      const bool hit = intersects(classification, lit.expansion);
      return lit.sign == Sign::Asserted ? hit : !hit;
    });
  });
}

std::vector<Annotation> filter(const std::vector<Annotation>& annotations, const Query& q,
                               const Ontology& o) {
  const CompiledQuery compiled(q, o);
  std::vector<Annotation> out;
  std::copy_if(annotations.begin(), annotations.end(), std::back_inserter(out),
               [&](const Annotation& a) { return compiled.matches(a.classification); });
  return out;
}

namespace {

// Oracle helpers: a plain tree walk with no memoized state. Must not call
// into final_descendants.
const Concept* naive_find(const Concept& node, const ConceptId& id) {
  if (node.id == id) return &node;
  for (const auto& child : node.children) {
    if (const Concept* hit = naive_find(child, id)) return hit;
  }
  return nullptr;
}

bool naive_has_final_descendant_in(const Concept& node, const ConceptSet& classification) {
  const bool leaf = node.children.empty() && !node.extensible;
  if (leaf) return classification.count(node.id) != 0;
  for (const auto& child : node.children) {
    if (naive_has_final_descendant_in(child, classification)) return true;
  }
  return false;
}

}  // namespace

std::vector<Annotation> brute_force_filter(const std::vector<Annotation>& annotations,
                                           const Query& q, const Ontology& o) {
  validate_query(q, o);
  std::vector<Annotation> out;
  for (const auto& a : annotations) {
    bool any = false;
    for (const auto& c : q.criteria) {
      bool all = true;
      for (const auto& lit : c.literals) {
        const Concept* node = naive_find(o.root, lit.concept_id);
        const bool hit = naive_has_final_descendant_in(*node, a.classification);
        const bool holds = lit.sign == Sign::Asserted ? hit : !hit;
        all = all && holds;
      }
      any = any || all;
    }
    if (any) out.push_back(a);
  }
  return out;
}

}  // namespace ontonote
