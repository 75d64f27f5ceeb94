#include "ontonote/sanitize.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <utility>
#include <vector>

namespace ontonote {

namespace {

constexpr std::array<std::string_view, 12> kAllowedTags = {
    "p", "br", "em", "strong", "ul", "ol", "li", "blockquote", "a", "img", "code", "span"};

// Elements whose text content is dropped along with the tags.
constexpr std::array<std::string_view, 11> kDropContent = {
    "script", "style", "iframe", "object", "embed", "template",
    "noscript", "textarea", "title", "svg", "math"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& list, std::string_view v) {
  return std::find(list.begin(), list.end(), v) != list.end();
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string escape_attr(std::string_view v) {
  std::string out;
  for (const char ch : v) {
    switch (ch) {
      case '"': out += "&quot;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(ch);
    }
  }
  return out;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '-' || c == '_' || c == ':';
}

struct Tag {
  std::string name;
  bool closing = false;
  std::vector<std::pair<std::string, std::string>> attrs;
};

// Parses a tag starting at html[pos] == '<'. On success advances pos past
// the closing '>' and returns true.
bool parse_tag(std::string_view html, std::size_t& pos, Tag& tag) {
  std::size_t i = pos + 1;
  if (i < html.size() && html[i] == '/') {
    tag.closing = true;
    ++i;
  }
  if (i >= html.size() || std::isalpha(static_cast<unsigned char>(html[i])) == 0) return false;
  const std::size_t name_start = i;
  while (i < html.size() && is_name_char(html[i])) ++i;
  tag.name = lower(html.substr(name_start, i - name_start));

  for (;;) {
    while (i < html.size() && (std::isspace(static_cast<unsigned char>(html[i])) != 0 || html[i] == '/')) ++i;
    if (i >= html.size()) {
      pos = html.size();
      return true;  // unterminated tag swallows the rest
    }
    if (html[i] == '>') {
      pos = i + 1;
      return true;
    }
    const std::size_t attr_start = i;
    while (i < html.size() && html[i] != '=' && html[i] != '>' &&
           std::isspace(static_cast<unsigned char>(html[i])) == 0 && html[i] != '/') {
      ++i;
    }
    std::string attr = lower(html.substr(attr_start, i - attr_start));
    std::string value;
    while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i])) != 0) ++i;
    if (i < html.size() && html[i] == '=') {
      ++i;
      while (i < html.size() && std::isspace(static_cast<unsigned char>(html[i])) != 0) ++i;
      if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
        const char quote = html[i++];
        const std::size_t v0 = i;
        while (i < html.size() && html[i] != quote) ++i;
        value = std::string(html.substr(v0, i - v0));
        if (i < html.size()) ++i;
      } else {
        const std::size_t v0 = i;
        while (i < html.size() && html[i] != '>' && std::isspace(static_cast<unsigned char>(html[i])) == 0) ++i;
        value = std::string(html.substr(v0, i - v0));
      }
    }
    if (!attr.empty()) tag.attrs.emplace_back(std::move(attr), std::move(value));
  }
}

bool attribute_allowed(std::string_view tag, std::string_view attr) {
  if (tag == "a") return attr == "href";
  if (tag == "img") return attr == "src" || attr == "alt";
  return false;
}

void skip_past_closing(std::string_view html, std::size_t& pos, std::string_view name) {
  const std::string needle = "</" + std::string(name);
  for (std::size_t i = pos; i < html.size(); ++i) {
    if (html[i] == '<' && i + needle.size() <= html.size() &&
        lower(html.substr(i, needle.size())) == needle) {
      const std::size_t close = html.find('>', i);
      pos = close == std::string_view::npos ? html.size() : close + 1;
      return;
    }
  }
  pos = html.size();
}

}  // namespace

bool is_allowed_uri(std::string_view uri) {
  std::size_t b = 0;
  while (b < uri.size() && std::isspace(static_cast<unsigned char>(uri[b])) != 0) ++b;
  const std::string head = lower(uri.substr(b, 8));
  return head.rfind("http://", 0) == 0 || head.rfind("https://", 0) == 0;
}

std::string sanitize_html(std::string_view html) {
  std::string out;
  out.reserve(html.size());
  std::size_t pos = 0;
  while (pos < html.size()) {
    const char ch = html[pos];
    if (ch != '<') {
      if (ch == '>') out += "&gt;";
      else out.push_back(ch);
      ++pos;
      continue;
    }
    if (html.substr(pos, 4) == "<!--") {
      const std::size_t end = html.find("-->", pos + 4);
      pos = end == std::string_view::npos ? html.size() : end + 3;
      continue;
    }
    if (pos + 1 < html.size() && (html[pos + 1] == '!' || html[pos + 1] == '?')) {
      const std::size_t end = html.find('>', pos);
      pos = end == std::string_view::npos ? html.size() : end + 1;
      continue;
    }
    Tag tag;
    std::size_t next = pos;
    if (!parse_tag(html, next, tag)) {
      out += "&lt;";
      ++pos;
      continue;
    }
    pos = next;
    if (!tag.closing && contains(kDropContent, tag.name)) {
      skip_past_closing(html, pos, tag.name);
      continue;
    }
    if (!contains(kAllowedTags, tag.name)) continue;
    if (tag.closing) {
      if (tag.name != "br" && tag.name != "img") out += "</" + tag.name + ">";
      continue;
    }
    out += "<" + tag.name;
    for (const auto& [attr, value] : tag.attrs) {
      if (!attribute_allowed(tag.name, attr)) continue;
      if ((attr == "href" || attr == "src") && !is_allowed_uri(value)) continue;
      out += " " + attr + "=\"" + escape_attr(value) + "\"";
    }
    out += ">";
  }
  return out;
}

}  // namespace ontonote
