// Shared fixtures, random generators and reference oracles for the tests
// and the acceptance runner. Nothing here calls into the code under test
// except to build inputs.
#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ontonote/annotation.hpp"
#include "ontonote/ontology.hpp"
#include "ontonote/query.hpp"

namespace ontonote::testing {

inline constexpr const char* kLiteraryAnalysis =
    "Analysis[Structure[Structure_type[Narration,Use_Of_frames],Plot,Setting],"
    "Criticism[Bibliographical,Psychological,Cultural]]";

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "ontonote-test-XXXXXX").string();
    if (::mkdtemp(tmpl.data()) == nullptr) std::abort();
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  [[nodiscard]] const std::filesystem::path& path() const { return path_; }
  [[nodiscard]] std::string str() const { return path_.string(); }

 private:
  std::filesystem::path path_;
};

using Rng = std::mt19937_64;

inline std::size_t uniform(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline bool coin(Rng& rng, double p = 0.5) { return std::bernoulli_distribution(p)(rng); }

/// Concept id of the concept whose name is `name` (first match in pre-order).
inline ConceptId id_of(const Ontology& o, const std::string& name) {
  for (const Concept* c : all_concepts(o)) {
    if (c->name == name) return c->id;
  }
  std::abort();
}

inline ConceptSet ids_of(const Ontology& o, std::initializer_list<const char*> names) {
  ConceptSet out;
  for (const char* n : names) out.insert(id_of(o, n));
  return out;
}

// Name fragments mixing plain ASCII, reserved bracket/query characters and
// multi-byte UTF-8.
inline std::string random_name(Rng& rng) {
  static const std::vector<std::string> pieces = {
      "a",  "b",  "Plot", "x1", "_",  "é",  "日本", "Ω",   "🙂",  " ",  "[",  "]",
      ",",  "*",  "\"",  "/",  ";",  ":",  "+",   "-",   "\t",  "ü",  "Z",  "q"};
  std::string name;
  const std::size_t n = uniform(rng, 1, 5);
  for (std::size_t i = 0; i < n; ++i) name += pieces[uniform(rng, 0, pieces.size() - 1)];
  // Names are stored trimmed.
  auto is_ws = [](char c) { return c == ' ' || c == '\t'; };
  while (!name.empty() && is_ws(name.front())) name.erase(name.begin());
  while (!name.empty() && is_ws(name.back())) name.pop_back();
  return name.empty() ? "n" : name;
}

inline std::string plain_name(Rng& rng, std::size_t serial) {
  static const char* stems[] = {"Plot", "Setting", "Theme", "Voice", "Irony", "Style", "Form", "Tone"};
  return std::string(stems[uniform(rng, 0, 7)]) + std::to_string(serial);
}

struct TreeShape {
  std::size_t max_concepts = 30;
  std::size_t max_depth = 6;
  std::size_t max_fanout = 8;
  bool unicode_names = false;
  double extensible_p = 0.1;
};

/// Random single-rooted tree with ids c1.. assigned in pre-order.
inline Ontology random_ontology(Rng& rng, const TreeShape& shape = {}) {
  Ontology o;
  std::size_t budget = uniform(rng, 1, shape.max_concepts);
  std::size_t serial = 0;
  auto make_name = [&](std::size_t s) { return shape.unicode_names ? random_name(rng) : plain_name(rng, s); };

  std::function<void(Concept&, std::size_t)> grow = [&](Concept& c, std::size_t depth) {
    if (depth >= shape.max_depth) return;
    const std::size_t fanout = std::min(uniform(rng, 0, shape.max_fanout), budget);
    std::set<std::string> used;
    for (std::size_t i = 0; i < fanout && budget > 0; ++i) {
      std::string name = make_name(++serial);
      if (!used.insert(name).second) continue;
      --budget;
      Concept child;
      child.name = std::move(name);
      c.children.push_back(std::move(child));
    }
    for (auto& child : c.children) grow(child, depth + 1);
    c.extensible = coin(rng, shape.extensible_p);
  };

  o.root.name = make_name(++serial);
  --budget;
  grow(o.root, 1);
  std::uint64_t next = 1;
  std::function<void(Concept&)> number = [&](Concept& c) {
    c.id = ConceptId("c" + std::to_string(next++));
    for (auto& child : c.children) number(child);
  };
  number(o.root);
  o.next_concept = next;
  return o;
}

// ---- Independent tree walks used by the oracles ----

inline const Concept* naive_find(const Concept& c, const ConceptId& id) {
  if (c.id == id) return &c;
  for (const auto& child : c.children) {
    if (const Concept* hit = naive_find(child, id)) return hit;
  }
  return nullptr;
}

inline void naive_leaves(const Concept& c, std::vector<ConceptId>& out) {
  if (c.children.empty() && !c.extensible) out.push_back(c.id);
  for (const auto& child : c.children) naive_leaves(child, out);
}

inline std::vector<const Concept*> naive_all(const Concept& c) {
  std::vector<const Concept*> out{&c};
  for (const auto& child : c.children) {
    auto sub = naive_all(child);
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

/// Oracle for a literal: walk c's subtree and look for a classified leaf.
inline bool oracle_literal(const Literal& lit, const ConceptSet& classification, const Ontology& o) {
  const Concept* c = naive_find(o.root, lit.concept_id);
  std::vector<ConceptId> leaves;
  naive_leaves(*c, leaves);
  bool hit = false;
  for (const auto& leaf : leaves) {
    if (classification.count(leaf) != 0) hit = true;
  }
  return lit.sign == Sign::Asserted ? hit : !hit;
}

inline bool oracle_matches(const Query& q, const ConceptSet& classification, const Ontology& o) {
  for (const auto& crit : q.criteria) {
    bool all = true;
    for (const auto& lit : crit.literals) all = all && oracle_literal(lit, classification, o);
    if (all) return true;
  }
  return false;
}

/// Non-empty classification of final concepts (empty when the tree has no
/// finals, e.g. a lone extensible root).
inline ConceptSet random_classification(Rng& rng, const Ontology& o, std::size_t max_size = 4) {
  std::vector<ConceptId> leaves;
  naive_leaves(o.root, leaves);
  ConceptSet out;
  if (leaves.empty()) return out;
  const std::size_t k = uniform(rng, 1, std::min(max_size, leaves.size()));
  while (out.size() < k) out.insert(leaves[uniform(rng, 0, leaves.size() - 1)]);
  return out;
}

inline std::vector<Annotation> random_annotations(Rng& rng, const Ontology& o, std::size_t max_count = 100) {
  std::vector<Annotation> out;
  const std::size_t n = uniform(rng, 0, max_count);
  for (std::size_t i = 0; i < n; ++i) {
    Annotation a;
    a.id = "ann-" + std::to_string(i);
    a.author = "s" + std::to_string(uniform(rng, 1, 5));
    a.anchor = TextSpan{i, i + 1};
    a.classification = random_classification(rng, o);
    out.push_back(std::move(a));
  }
  return out;
}

/// Query with up to `max_criteria` criteria of up to `max_literals` literals
/// over any concepts of o; no duplicate (sign, concept) within a criterion.
inline Query random_query(Rng& rng, const Ontology& o, std::size_t max_criteria = 4, std::size_t max_literals = 5) {
  const auto concepts = naive_all(o.root);
  Query q;
  const std::size_t nc = uniform(rng, 1, max_criteria);
  for (std::size_t i = 0; i < nc; ++i) {
    Criterion crit;
    if (coin(rng)) crit.name = "k" + std::to_string(i);
    const std::size_t nl = uniform(rng, 1, max_literals);
    for (std::size_t j = 0; j < nl; ++j) {
      Literal lit{coin(rng) ? Sign::Asserted : Sign::Denied, concepts[uniform(rng, 0, concepts.size() - 1)]->id};
      if (std::find(crit.literals.begin(), crit.literals.end(), lit) == crit.literals.end()) {
        crit.literals.push_back(lit);
      }
    }
    q.criteria.push_back(std::move(crit));
  }
  return q;
}

// ---- Statistics oracles ----

/// U for sample a: pairs (x in a, y in b) with x > y, ties counting half.
inline double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0;
  for (const double x : a) {
    for (const double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
  }
  return u;
}

/// Exact two-sided Mann-Whitney p by enumerating every assignment of the
/// pooled values to the first group (bitmask over n1+n2 positions).
inline double mw_enumeration_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size();
  const double u_obs = pairwise_u(a, b);
  std::size_t lo = 0, hi = 0, total = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != a.size()) continue;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? x : y).push_back(pooled[i]);
    const double u = pairwise_u(x, y);
    ++total;
    if (u <= u_obs) ++lo;
    if (u >= u_obs) ++hi;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lo, hi)) / static_cast<double>(total));
}

/// Exact two-sided Wilcoxon p by enumerating all 2^m sign assignments of the
/// absolute-rank vector (zeros dropped, ties given mid-ranks).
inline double wilcoxon_enumeration_p(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (const double x : diffs) {
    if (x != 0) d.push_back(x);
  }
  const std::size_t m = d.size();
  std::vector<double> ranks(m);
  for (std::size_t i = 0; i < m; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < m; ++j) {
      if (std::fabs(d[j]) < std::fabs(d[i])) ++less;
      if (std::fabs(d[j]) == std::fabs(d[i])) ++equal;
    }
    ranks[i] = less + (equal + 1) / 2.0;
  }
  double w_obs = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (d[i] > 0) w_obs += ranks[i];
  }
  std::size_t lo = 0, hi = 0;
  const std::uint64_t total = std::uint64_t{1} << m;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    double w = 0;
    for (std::size_t i = 0; i < m; ++i) {
      if ((mask >> i) & 1u) w += ranks[i];
    }
    if (w <= w_obs + 1e-9) ++lo;
    if (w >= w_obs - 1e-9) ++hi;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lo, hi)) / static_cast<double>(total));
}

/// Distinct values drawn without replacement from 1..range (tie-free samples).
inline std::vector<double> distinct_values(Rng& rng, std::size_t n, std::size_t range = 1000) {
  std::set<double> seen;
  std::vector<double> out;
  while (out.size() < n) {
    const double v = static_cast<double>(uniform(rng, 1, range));
    if (seen.insert(v).second) out.push_back(v);
  }
  return out;
}

}  // namespace ontonote::testing
