#include <functional>
#include <set>

#include "ontonote/error.hpp"
#include "ontonote/query.hpp"
#include "ontonote/utf8.hpp"

namespace ontonote {

namespace {

bool is_path_delim(char32_t c) {
  return utf8::is_space(c) || c == '/' || c == ';' || c == ':' || c == '"' || c == ',';
}

bool is_criterion_name_delim(char32_t c) {
  return utf8::is_space(c) || c == ':' || c == ';' || c == '"';
}

std::string quote(std::string_view name) {
  std::string out = "\"";
  for (const char ch : name) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string quote_segment(std::string_view name) {
  bool needs = name.empty() || name.front() == '+' || name.front() == '-';
  for (std::size_t pos = 0; !needs && pos < name.size();) {
    const char32_t c = utf8::next(name, pos);
    needs = is_path_delim(c) || c < 0x20;
  }
  return needs ? quote(name) : std::string(name);
}

std::string quote_criterion_name(std::string_view name) {
  bool needs = name.front() == '+' || name.front() == '-';
  for (std::size_t pos = 0; !needs && pos < name.size();) {
    const char32_t c = utf8::next(name, pos);
    needs = is_criterion_name_delim(c) || c < 0x20;
  }
  return needs ? quote(name) : std::string(name);
}

struct PathRef {
  std::vector<std::string> segments;
  std::size_t start = 0;
};

class Scanner {
 public:
  explicit Scanner(std::string_view text) {
    for (std::size_t pos = 0; pos < text.size();) cps_.push_back(utf8::next(text, pos));
  }

  [[nodiscard]] bool at_end() const { return pos_ >= cps_.size(); }
  [[nodiscard]] char32_t peek() const { return cps_[pos_]; }
  [[nodiscard]] std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }

  void skip_ws() {
    while (!at_end() && utf8::is_space(peek())) ++pos_;
  }

  std::string token(const std::function<bool(char32_t)>& is_delim, const char* what) {
    std::string out;
    const std::size_t start = pos_;
    if (!at_end() && peek() == '"') {
      ++pos_;
      for (;;) {
        if (at_end()) fail_at(start, std::string("unterminated quoted ") + what);
        const char32_t c = cps_[pos_++];
        if (c == '"') {
          if (!at_end() && peek() == '"') {
            out.push_back('"');
            ++pos_;
            continue;
          }
          break;
        }
        utf8::append(out, c);
      }
      out = utf8::trim(out);
    } else {
      while (!at_end() && !is_delim(peek())) utf8::append(out, cps_[pos_++]);
    }
    if (out.empty()) fail_at(start, std::string("expected ") + what);
    return out;
  }

  PathRef path() {
    PathRef ref;
    ref.start = pos_;
    ref.segments.push_back(token(is_path_delim, "concept name"));
    while (!at_end() && peek() == '/') {
      ++pos_;
      ref.segments.push_back(token(is_path_delim, "concept name"));
    }
    return ref;
  }

  [[noreturn]] void fail_at(std::size_t at, const std::string& reason,
                            ErrorCode code = ErrorCode::ParseError) const {
    TextPosition p;
    p.offset = at;
    for (std::size_t i = 0; i < at && i < cps_.size(); ++i) {
      if (cps_[i] == '\n') {
        ++p.line;
        p.column = 1;
      } else {
        ++p.column;
      }
    }
    throw Error(code, "line " + std::to_string(p.line) + ", column " + std::to_string(p.column) + ": " + reason, p);
  }

 private:
  std::vector<char32_t> cps_;
  std::size_t pos_ = 0;
};

ConceptId resolve_at(const Ontology& o, const Scanner& s, const PathRef& ref) {
  try {
    return resolve_path(o, ref.segments);
  } catch (const Error& e) {
    s.fail_at(ref.start, e.what(), e.code());
  }
}

Criterion parse_criterion(Scanner& s, const Ontology& o) {
  Criterion c;
  s.skip_ws();
  const std::size_t start = s.pos();
  if (s.at_end() || s.peek() == ';') s.fail_at(start, "empty criterion");
  if (s.peek() == ':') {
    s.advance();
  } else if (s.peek() != '+' && s.peek() != '-') {
    c.name = s.token(is_criterion_name_delim, "criterion name");
    s.skip_ws();
    if (s.at_end() || s.peek() != ':') s.fail_at(s.pos(), "expected ':' after criterion name or a '+'/'-' literal");
    s.advance();
  }
  std::set<std::pair<Sign, ConceptId>> seen;
  for (;;) {
    s.skip_ws();
    if (s.at_end() || s.peek() == ';') break;
    const std::size_t lit_start = s.pos();
    Literal lit;
    if (s.peek() == '+') lit.sign = Sign::Asserted;
    else if (s.peek() == '-') lit.sign = Sign::Denied;
    else s.fail_at(lit_start, "expected '+' or '-'");
    s.advance();
    const PathRef ref = s.path();
    lit.concept_id = resolve_at(o, s, ref);
    if (!s.at_end() && !utf8::is_space(s.peek()) && s.peek() != ';') {
      s.fail_at(s.pos(), "unexpected character after concept path");
    }
    if (!seen.insert({lit.sign, lit.concept_id}).second) s.fail_at(lit_start, "duplicate literal");
    c.literals.push_back(std::move(lit));
  }
  if (c.literals.empty()) s.fail_at(s.pos(), "a criterion needs at least one literal");
  return c;
}

void collect_tail_matches(const Concept& node, std::vector<const Concept*>& stack,
                          const std::vector<std::string>& segments, std::vector<ConceptId>& out) {
  stack.push_back(&node);
  if (stack.size() >= segments.size()) {
    bool ok = true;
    for (std::size_t i = 0; ok && i < segments.size(); ++i) {
      ok = stack[stack.size() - segments.size() + i]->name == segments[i];
    }
    if (ok) out.push_back(node.id);
  }
  for (const auto& child : node.children) collect_tail_matches(child, stack, segments, out);
  stack.pop_back();
}

}  // namespace

ConceptId resolve_path(const Ontology& o, const std::vector<std::string>& segments) {
  if (segments.empty()) throw Error(ErrorCode::UnknownConcept, "empty concept path");
  std::string joined;
  for (const auto& seg : segments) joined += (joined.empty() ? "" : "/") + seg;

  if (segments.front() == o.root.name) {
    const Concept* node = &o.root;
    for (std::size_t i = 1; node != nullptr && i < segments.size(); ++i) {
      const Concept* next = nullptr;
      for (const auto& child : node->children) {
        if (child.name == segments[i]) next = &child;
      }
      node = next;
    }
    if (node != nullptr) return node->id;
  }
  std::vector<ConceptId> hits;
  std::vector<const Concept*> stack;
  collect_tail_matches(o.root, stack, segments, hits);
  if (hits.empty()) throw Error(ErrorCode::UnknownConcept, "no concept matches '" + joined + "'");
  if (hits.size() > 1) {
    throw Error(ErrorCode::AmbiguousConcept, "'" + joined + "' matches " + std::to_string(hits.size()) +
                                                 " concepts; qualify it with a parent path");
  }
  return hits.front();
}

ConceptId resolve_path(const Ontology& o, std::string_view path) {
  Scanner s(path);
  s.skip_ws();
  const PathRef ref = s.path();
  s.skip_ws();
  if (!s.at_end()) s.fail_at(s.pos(), "unexpected character after concept path");
  return resolve_at(o, s, ref);
}

std::string concept_reference(const Ontology& o, const ConceptId& id) {
  const std::vector<std::string> full = concept_path(o, id);
  for (std::size_t k = 1; k <= full.size(); ++k) {
    const std::vector<std::string> tail(full.end() - static_cast<std::ptrdiff_t>(k), full.end());
    try {
      if (resolve_path(o, tail) != id) continue;
    } catch (const Error&) {
      continue;
    }
    std::string out;
    for (const auto& seg : tail) out += (out.empty() ? "" : "/") + quote_segment(seg);
    return out;
  }
  // Unreachable for a valid tree: the full path always resolves from the root.
  throw Error(ErrorCode::UnknownConcept, "cannot reference concept '" + id.value + "'");
}

Query parse_query(std::string_view text, const Ontology& o) {
  Scanner s(text);
  Query q;
  std::set<std::string> names;
  for (;;) {
    const std::size_t start = s.pos();
    Criterion c = parse_criterion(s, o);
    if (!c.name.empty() && !names.insert(c.name).second) {
      s.fail_at(start, "duplicate criterion name '" + c.name + "'");
    }
    q.criteria.push_back(std::move(c));
    s.skip_ws();
    if (s.at_end()) break;
    s.advance();  // ';'
  }
  return q;
}

std::string serialize_query(const Query& q, const Ontology& o) {
  std::string out;
  for (std::size_t i = 0; i < q.criteria.size(); ++i) {
    const auto& c = q.criteria[i];
    if (i != 0) out += "; ";
    if (!c.name.empty()) out += quote_criterion_name(c.name) + ": ";
    for (std::size_t j = 0; j < c.literals.size(); ++j) {
      if (j != 0) out.push_back(' ');
      out.push_back(c.literals[j].sign == Sign::Asserted ? '+' : '-');
      out += concept_reference(o, c.literals[j].concept_id);
    }
  }
  return out;
}

BasicFilter parse_concept_list(std::string_view text, const Ontology& o) {
  Scanner s(text);
  BasicFilter f;
  for (;;) {
    s.skip_ws();
    const PathRef ref = s.path();
    f.concepts.insert(resolve_at(o, s, ref));
    s.skip_ws();
    if (s.at_end()) break;
    if (s.peek() != ',') s.fail_at(s.pos(), "expected ',' between concepts");
    s.advance();
  }
  return f;
}

}  // namespace ontonote
