#include "ontonote/ontology.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "ontonote/error.hpp"
#include "ontonote/utf8.hpp"

namespace ontonote {

std::string_view to_string(Visibility v) {
  return v == Visibility::Public ? "public" : "private";
}

Visibility visibility_from_string(std::string_view s) {
  if (s == "public") return Visibility::Public;
  if (s == "private") return Visibility::Private;
  throw Error(ErrorCode::Validation, "visibility must be 'private' or 'public'");
}

namespace {

const Concept* find_in(const Concept& c, const ConceptId& id) {
  if (c.id == id) return &c;
  for (const auto& child : c.children) {
    if (const Concept* hit = find_in(child, id)) return hit;
  }
  return nullptr;
}

Concept* find_in(Concept& c, const ConceptId& id) {
  return const_cast<Concept*>(find_in(static_cast<const Concept&>(c), id));
}

const Concept* parent_in(const Concept& c, const ConceptId& id) {
  for (const auto& child : c.children) {
    if (child.id == id) return &c;
    if (const Concept* hit = parent_in(child, id)) return hit;
  }
  return nullptr;
}

Concept* parent_in(Concept& c, const ConceptId& id) {
  return const_cast<Concept*>(parent_in(static_cast<const Concept&>(c), id));
}

[[noreturn]] void unknown(const ConceptId& id) {
  throw Error(ErrorCode::UnknownConcept, "unknown concept '" + id.value + "'");
}

void collect_finals(const Concept& c, ConceptSet& out) {
  if (c.is_final()) {
    out.insert(c.id);
    return;
  }
  for (const auto& child : c.children) collect_finals(child, out);
}

std::string checked_name(std::string_view name) {
  std::string trimmed = utf8::trim(name);
  if (trimmed.empty()) throw Error(ErrorCode::InvalidName, "concept name must not be empty");
  return trimmed;
}

void require_unique_sibling(const Concept& parent, const std::string& name,
                            const ConceptId* ignore = nullptr) {
  for (const auto& child : parent.children) {
    if (ignore != nullptr && child.id == *ignore) continue;
    if (child.name == name) {
      throw Error(ErrorCode::DuplicateSibling,
                  "'" + parent.name + "' already has a subconcept named '" + name + "'");
    }
  }
}

bool intersects(const ConceptSet& a, const ConceptSet& b) {
  const ConceptSet& small = a.size() < b.size() ? a : b;
  const ConceptSet& large = a.size() < b.size() ? b : a;
  return std::any_of(small.begin(), small.end(),
                     [&](const ConceptId& id) { return large.count(id) != 0; });
}

ConceptId fresh_id(Ontology& o) { return ConceptId("c" + std::to_string(o.next_concept++)); }

struct EditApplier {
  Ontology& o;
  const ConceptSet& usage;

  Concept& target(const ConceptId& id) {
    Concept* c = find_in(o.root, id);
    if (c == nullptr) unknown(id);
    return *c;
  }

  // A final concept referenced by annotations must stay final.
  void require_may_become_intermediate(const Concept& c) {
    if (c.is_final() && usage.count(c.id) != 0) {
      throw Error(ErrorCode::InUse, "'" + c.name +
                                        "' classifies existing annotations and "
                                        "cannot become intermediate");
    }
    if (c.provenance.is_student()) {
      throw Error(ErrorCode::InvalidEdit,
                  "student-proposed concept '" + c.name + "' must remain final");
    }
  }

  void operator()(const edit::Rename& op) {
    Concept& c = target(op.target);
    const std::string name = checked_name(op.name);
    if (const Concept* parent = parent_in(o.root, op.target)) {
      require_unique_sibling(*parent, name, &op.target);
    }
    c.name = name;
  }

  void operator()(const edit::AddChild& op) {
    Concept& parent = target(op.parent);
    const std::string name = checked_name(op.name);
    require_unique_sibling(parent, name);
    require_may_become_intermediate(parent);
    Concept child;
    child.id = fresh_id(o);
    child.name = name;
    child.extensible = op.extensible;
    parent.children.push_back(std::move(child));
  }

  void operator()(const edit::Delete& op) {
    if (op.target == o.root.id) throw Error(ErrorCode::DeleteRoot, "the root concept cannot be deleted");
    const Concept& c = target(op.target);
    ConceptSet affected;
    collect_finals(c, affected);
    if (intersects(affected, usage)) {
      throw Error(ErrorCode::InUse, "'" + c.name + "' (or a subconcept) classifies existing annotations");
    }
    Concept* parent = parent_in(o.root, op.target);
    // Removing the last child turns a non-extensible parent final.
    auto& siblings = parent->children;
    siblings.erase(std::remove_if(siblings.begin(), siblings.end(),
                                  [&](const Concept& s) { return s.id == op.target; }),
                   siblings.end());
  }

  void operator()(const edit::Move& op) {
    if (op.target == o.root.id) throw Error(ErrorCode::InvalidEdit, "the root concept cannot be moved");
    const Concept& moving = target(op.target);
    if (find_in(moving, op.new_parent) != nullptr) {
      throw Error(ErrorCode::Cycle, "cannot move '" + moving.name + "' under itself or a descendant");
    }
    Concept& new_parent = target(op.new_parent);
    require_unique_sibling(new_parent, moving.name, &op.target);
    if (moving.provenance.is_student() && !new_parent.extensible) {
      throw Error(ErrorCode::NotExtensible,
                  "student-proposed concepts may only live under extensible concepts");
    }
    require_may_become_intermediate(new_parent);

    Concept* old_parent = parent_in(o.root, op.target);
    auto& old_siblings = old_parent->children;
    auto it = std::find_if(old_siblings.begin(), old_siblings.end(),
                           [&](const Concept& s) { return s.id == op.target; });
    Concept detached = std::move(*it);
    old_siblings.erase(it);

    // new_parent may have been invalidated by the erase when it shares storage
    // with the old sibling list; look it up again.
    Concept& dest = target(op.new_parent);
    if (op.position > dest.children.size()) {
      throw Error(ErrorCode::InvalidEdit, "move position " + std::to_string(op.position) +
                                              " is out of range");
    }
    dest.children.insert(dest.children.begin() + static_cast<std::ptrdiff_t>(op.position),
                         std::move(detached));
  }

  void operator()(const edit::SetExtensible& op) {
    Concept& c = target(op.target);
    if (c.extensible == op.flag) return;
    if (op.flag) {
      require_may_become_intermediate(c);
    } else {
      for (const auto& child : c.children) {
        if (child.provenance.is_student()) {
          throw Error(ErrorCode::InvalidEdit,
                      "'" + c.name + "' holds student-proposed concepts and must stay extensible");
        }
      }
    }
    c.extensible = op.flag;
  }
};

void validate_concept(const Concept& c, const Concept* parent, std::set<ConceptId>& ids) {
  if (c.id.value.empty()) throw Error(ErrorCode::InvalidOntology, "concept without id");
  if (!ids.insert(c.id).second) {
    throw Error(ErrorCode::InvalidOntology, "duplicate concept id '" + c.id.value + "'");
  }
  if (c.name.empty() || utf8::trim(c.name) != c.name) {
    throw Error(ErrorCode::InvalidOntology, "concept '" + c.id.value + "' has an invalid name");
  }
  if (c.provenance.is_student()) {
    if (!c.children.empty() || c.extensible || parent == nullptr || !parent->extensible) {
      throw Error(ErrorCode::InvalidOntology,
                  "student-proposed concept '" + c.name + "' must be a final child of an extensible concept");
    }
  }
  std::set<std::string> names;
  for (const auto& child : c.children) {
    if (!names.insert(child.name).second) {
      throw Error(ErrorCode::InvalidOntology, "duplicate sibling name '" + child.name + "'");
    }
    validate_concept(child, &c, ids);
  }
}

void walk_metrics(const Concept& c, std::size_t level, OntologyMetrics& m) {
  ++m.concepts;
  m.depth = std::max(m.depth, level);
  if (c.is_final()) {
    ++m.finals;
  } else {
    ++m.intermediates;
    m.intermediate_children += c.children.size();
  }
  for (const auto& child : c.children) walk_metrics(child, level + 1, m);
}

}  // namespace

const Concept* find_concept(const Ontology& o, const ConceptId& id) { return find_in(o.root, id); }

const Concept& get_concept(const Ontology& o, const ConceptId& id) {
  const Concept* c = find_in(o.root, id);
  if (c == nullptr) unknown(id);
  return *c;
}

const Concept* parent_of(const Ontology& o, const ConceptId& id) { return parent_in(o.root, id); }

std::vector<std::string> concept_path(const Ontology& o, const ConceptId& id) {
  std::vector<std::string> path;
  std::function<bool(const Concept&)> walk = [&](const Concept& c) {
    path.push_back(c.name);
    if (c.id == id) return true;
    for (const auto& child : c.children) {
      if (walk(child)) return true;
    }
    path.pop_back();
    return false;
  };
  if (!walk(o.root)) unknown(id);
  return path;
}

std::vector<const Concept*> all_concepts(const Ontology& o) {
  std::vector<const Concept*> out;
  std::function<void(const Concept&)> walk = [&](const Concept& c) {
    out.push_back(&c);
    for (const auto& child : c.children) walk(child);
  };
  walk(o.root);
  return out;
}

ConceptSet finals(const Ontology& o) {
  ConceptSet out;
  collect_finals(o.root, out);
  return out;
}

ConceptSet intermediates(const Ontology& o) {
  ConceptSet out;
  for (const Concept* c : all_concepts(o)) {
    if (c->is_intermediate()) out.insert(c->id);
  }
  return out;
}

ConceptSet final_descendants(const Ontology& o, const ConceptId& c) {
  ConceptSet out;
  collect_finals(get_concept(o, c), out);
  return out;
}

OntologyMetrics metrics(const Ontology& o) {
  OntologyMetrics m;
  walk_metrics(o.root, 1, m);
  return m;
}

void validate(const Ontology& o) {
  std::set<ConceptId> ids;
  validate_concept(o.root, nullptr, ids);
  if (o.root.provenance.is_student()) {
    throw Error(ErrorCode::InvalidOntology, "the root cannot be student-proposed");
  }
  for (const auto& id : ids) {
    if (id.value.size() > 1 && id.value[0] == 'c') {
      try {
        if (std::stoull(id.value.substr(1)) >= o.next_concept) {
          throw Error(ErrorCode::InvalidOntology, "concept id '" + id.value + "' is ahead of the id counter");
        }
      } catch (const std::logic_error&) {
        // Non-numeric ids are accepted as opaque tokens.
      }
    }
  }
}

Ontology apply_edit(const Ontology& o, const EditOp& op, const ConceptSet& usage) {
  Ontology next = o;
  std::visit(EditApplier{next, usage}, op);
  ++next.revision;
  return next;
}

Ontology propose_final(const Ontology& o, const ConceptId& parent, std::string_view name,
                       std::string_view author, std::string_view timestamp) {
  const Concept& p = get_concept(o, parent);
  if (!p.extensible) {
    throw Error(ErrorCode::NotExtensible, "'" + p.name + "' does not accept student proposals");
  }
  const std::string trimmed = checked_name(name);
  require_unique_sibling(p, trimmed);

  Ontology next = o;
  Concept child;
  child.id = fresh_id(next);
  child.name = trimmed;
  child.provenance = Provenance{Provenance::Kind::Student, std::string(author), std::string(timestamp)};
  find_in(next.root, parent)->children.push_back(std::move(child));
  ++next.revision;
  return next;
}

Ontology snapshot(const Ontology& o, std::string id) {
  Ontology copy = o;
  copy.id = std::move(id);
  copy.revision = 0;
  return copy;
}

bool same_shape(const Concept& a, const Concept& b) {
  if (a.name != b.name || a.extensible != b.extensible || a.children.size() != b.children.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    if (!same_shape(a.children[i], b.children[i])) return false;
  }
  return true;
}

}  // namespace ontonote
