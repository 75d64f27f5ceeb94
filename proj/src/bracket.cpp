// Bracket notation for concept taxonomies:
//
//   ontology := concept EOF
//   concept  := name ["*"] ["[" concept ("," concept)* "]"]
//   name     := bare-name | quoted-name
//
// Bare names run until one of `[ ] , *` or a newline and are trimmed.
// Quoted names use `""` to escape a quote.

#include <set>
#include <string>
#include <vector>

#include "ontonote/error.hpp"
#include "ontonote/ontology.hpp"
#include "ontonote/utf8.hpp"

namespace ontonote {

namespace {

constexpr std::size_t kMaxNesting = 512;

class BracketParser {
 public:
  explicit BracketParser(std::string_view text) {
    for (std::size_t pos = 0; pos < text.size();) {
      cps_.push_back(utf8::next(text, pos));
    }
  }

  Ontology parse() {
    Ontology o;
    skip_ws();
    o.root = parse_concept(0);
    skip_ws();
    if (!at_end()) {
      if (peek() == ']') fail("unbalanced bracket: unexpected ']'");
      fail("trailing garbage after root concept");
    }
    assign_ids(o.root);
    o.next_concept = next_id_;
    return o;
  }

 private:
  Concept parse_concept(std::size_t depth) {
    if (depth > kMaxNesting) fail("nesting too deep");
    Concept c;
    c.name = parse_name();
    skip_ws();
    if (!at_end() && peek() == '*') {
      c.extensible = true;
      ++pos_;
      skip_ws();
    }
    if (!at_end() && peek() == '[') {
      ++pos_;
      std::set<std::string> seen;
      for (;;) {
        skip_ws();
        const std::size_t child_start = pos_;
        if (at_end()) fail("unbalanced bracket: missing ']'");
        Concept child = parse_concept(depth + 1);
        if (!seen.insert(child.name).second) {
          fail_at(child_start, "duplicate sibling name '" + child.name + "'",
                  ErrorCode::ParseError);
        }
        c.children.push_back(std::move(child));
        skip_ws();
        if (at_end()) fail("unbalanced bracket: missing ']'");
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          break;
        }
        fail("expected ',' or ']'");
      }
    }
    return c;
  }

  std::string parse_name() {
    if (at_end()) fail("empty name");
    std::string raw;
    const std::size_t start = pos_;
    if (peek() == '"') {
      ++pos_;
      for (;;) {
        if (at_end()) fail_at(start, "unterminated quoted name", ErrorCode::ParseError);
        const char32_t ch = cps_[pos_++];
        if (ch == '"') {
          if (!at_end() && peek() == '"') {
            raw.push_back('"');
            ++pos_;
            continue;
          }
          break;
        }
        utf8::append(raw, ch);
      }
    } else {
      while (!at_end()) {
        const char32_t ch = peek();
        if (ch == '[' || ch == ']' || ch == ',' || ch == '*' || ch == '\n') break;
        utf8::append(raw, ch);
        ++pos_;
      }
    }
    std::string name = utf8::trim(raw);
    if (name.empty()) fail_at(start, "empty name", ErrorCode::ParseError);
    return name;
  }

  void assign_ids(Concept& c) {
    c.id = ConceptId("c" + std::to_string(next_id_++));
    for (auto& child : c.children) assign_ids(child);
  }

  void skip_ws() {
    while (!at_end() && utf8::is_space(peek())) ++pos_;
  }
  [[nodiscard]] bool at_end() const { return pos_ >= cps_.size(); }
  [[nodiscard]] char32_t peek() const { return cps_[pos_]; }

  [[noreturn]] void fail(const std::string& reason) {
    fail_at(pos_, reason, ErrorCode::ParseError);
  }

  [[noreturn]] void fail_at(std::size_t at, const std::string& reason,
                            ErrorCode code) {
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
    throw Error(code,
                "line " + std::to_string(p.line) + ", column " +
                    std::to_string(p.column) + ": " + reason,
                p);
  }

  std::vector<char32_t> cps_;
  std::size_t pos_ = 0;
  std::uint64_t next_id_ = 1;
};

bool needs_quoting(std::string_view name) {
  if (name.empty()) return true;
  if (utf8::is_space(static_cast<unsigned char>(name.front())) ||
      utf8::is_space(static_cast<unsigned char>(name.back()))) {
    return true;
  }
  for (const char ch : name) {
    const auto u = static_cast<unsigned char>(ch);
    if (ch == '[' || ch == ']' || ch == ',' || ch == '*' || ch == '"' || u < 0x20) {
      return true;
    }
  }
  return false;
}

void write_concept(const Concept& c, std::string& out) {
  out += quote_name_if_needed(c.name);
  if (c.extensible) out.push_back('*');
  if (c.children.empty()) return;
  out.push_back('[');
  for (std::size_t i = 0; i < c.children.size(); ++i) {
    if (i != 0) out.push_back(',');
    write_concept(c.children[i], out);
  }
  out.push_back(']');
}

}  // namespace

std::string quote_name_if_needed(std::string_view name) {
  if (!needs_quoting(name)) return std::string(name);
  std::string out = "\"";
  for (const char ch : name) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

Ontology parse_bracket(std::string_view text) { return BracketParser(text).parse(); }

std::string serialize_bracket(const Concept& c) {
  std::string out;
  write_concept(c, out);
  return out;
}

std::string serialize_bracket(const Ontology& o) { return serialize_bracket(o.root); }

}  // namespace ontonote
