#include "ontonote/json_io.hpp"

#include <cmath>

namespace ontonote {

Json parse_json(std::string_view text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("invalid JSON in ") + what + ": " + e.what());
  }
}

double round4(double x) {
  const double r = std::round(x * 10000.0) / 10000.0;
  return r == 0.0 ? 0.0 : r;  // no negative zero in exports
}

void to_json(Json& j, const ConceptId& id) { j = id.value; }
void from_json(const Json& j, ConceptId& id) { id.value = j.get<std::string>(); }

void to_json(Json& j, const Concept& c) {
  Json prov;
  if (c.provenance.is_student()) {
    prov = {{"kind", "student"}, {"author", c.provenance.author}, {"timestamp", c.provenance.timestamp}};
  } else {
    prov = {{"kind", "instructor"}};
  }
  j = Json{{"id", c.id},
           {"name", c.name},
           {"extensible", c.extensible},
           {"provenance", prov},
           {"children", c.children}};
}

void from_json(const Json& j, Concept& c) {
  c.id = j.at("id").get<ConceptId>();
  c.name = j.at("name").get<std::string>();
  c.extensible = j.value("extensible", false);
  c.provenance = {};
  if (j.contains("provenance") && j.at("provenance").value("kind", "instructor") == "student") {
    const auto& p = j.at("provenance");
    c.provenance.kind = Provenance::Kind::Student;
    c.provenance.author = p.at("author").get<std::string>();
    c.provenance.timestamp = p.value("timestamp", "");
  }
  c.children = j.value("children", std::vector<Concept>{});
}

void to_json(Json& j, const Ontology& o) {
  j = Json{{"id", o.id},
           {"owner", o.owner},
           {"visibility", to_string(o.visibility)},
           {"revision", o.revision},
           {"next_concept", o.next_concept},
           {"root", o.root}};
}

void from_json(const Json& j, Ontology& o) {
  o.id = j.value("id", "");
  o.owner = j.value("owner", "");
  o.visibility = visibility_from_string(j.value("visibility", "private"));
  o.revision = j.value("revision", std::uint64_t{0});
  o.root = j.at("root").get<Concept>();
  o.next_concept = j.at("next_concept").get<std::uint64_t>();
}

namespace edit {

void to_json(Json& j, const EditOp& op) {
  std::visit(
      [&j](const auto& e) {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Rename>) {
          j = Json{{"op", "rename"}, {"target", e.target}, {"name", e.name}};
        } else if constexpr (std::is_same_v<T, AddChild>) {
          j = Json{{"op", "add_child"}, {"parent", e.parent}, {"name", e.name}, {"extensible", e.extensible}};
        } else if constexpr (std::is_same_v<T, Delete>) {
          j = Json{{"op", "delete"}, {"target", e.target}};
        } else if constexpr (std::is_same_v<T, Move>) {
          j = Json{{"op", "move"}, {"target", e.target}, {"new_parent", e.new_parent}, {"position", e.position}};
        } else {
          j = Json{{"op", "set_extensible"}, {"target", e.target}, {"flag", e.flag}};
        }
      },
      op);
}

void from_json(const Json& j, EditOp& op) {
  const auto kind = j.at("op").get<std::string>();
  if (kind == "rename") {
    op = Rename{j.at("target").get<ConceptId>(), j.at("name").get<std::string>()};
  } else if (kind == "add_child") {
    op = AddChild{j.at("parent").get<ConceptId>(), j.at("name").get<std::string>(), j.value("extensible", false)};
  } else if (kind == "delete") {
    op = Delete{j.at("target").get<ConceptId>()};
  } else if (kind == "move") {
    op = Move{j.at("target").get<ConceptId>(), j.at("new_parent").get<ConceptId>(),
              j.at("position").get<std::size_t>()};
  } else if (kind == "set_extensible") {
    op = SetExtensible{j.at("target").get<ConceptId>(), j.at("flag").get<bool>()};
  } else {
    throw Error(ErrorCode::Validation, "unknown edit op '" + kind + "'");
  }
}

}  // namespace edit

void to_json(Json& j, const User& u) {
  j = Json{{"id", u.id}, {"display_name", u.display_name}, {"role", to_string(u.role)}};
  if (!u.token.empty()) j["token"] = u.token;
}

void from_json(const Json& j, User& u) {
  u.id = j.at("id").get<std::string>();
  u.display_name = j.value("display_name", u.id);
  u.role = role_from_string(j.at("role").get<std::string>());
  u.token = j.value("token", "");
}

void to_json(Json& j, const Group& g) {
  j = Json{{"id", g.id}, {"name", g.name}, {"members", g.members}};
}

void from_json(const Json& j, Group& g) {
  g.id = j.value("id", "");
  g.name = j.at("name").get<std::string>();
  g.members = j.value("members", std::set<std::string>{});
}

void to_json(Json& j, const Document& d) {
  j = Json{{"id", d.id}, {"title", d.title}};
  j["source"] = d.remote_uri ? Json{{"kind", "remote"}, {"uri", *d.remote_uri}} : Json{{"kind", "local"}};
  if (const auto* t = std::get_if<TextBody>(&d.body)) {
    j["body"] = Json{{"kind", "text"}, {"text", t->text}, {"length", d.text_length()}};
  } else {
    Json pages = Json::array();
    for (const auto& p : std::get<PagedBody>(d.body).pages) {
      pages.push_back(Json{{"width", p.width}, {"height", p.height}, {"image", p.image}});
    }
    j["body"] = Json{{"kind", "paged"}, {"pages", pages}};
  }
}

void from_json(const Json& j, Document& d) {
  d.id = j.value("id", "");
  d.title = j.at("title").get<std::string>();
  d.remote_uri.reset();
  if (j.contains("source") && j.at("source").value("kind", "local") == "remote") {
    d.remote_uri = j.at("source").at("uri").get<std::string>();
  }
  const auto& body = j.at("body");
  const auto kind = body.at("kind").get<std::string>();
  if (kind == "text") {
    d.body = TextBody{body.at("text").get<std::string>()};
  } else if (kind == "paged") {
    PagedBody paged;
    for (const auto& p : body.at("pages")) {
      paged.pages.push_back(Page{p.at("width").get<std::uint32_t>(), p.at("height").get<std::uint32_t>(),
                                 p.value("image", "")});
    }
    d.body = std::move(paged);
  } else {
    throw Error(ErrorCode::Validation, "document body kind must be 'text' or 'paged'");
  }
}

void to_json(Json& j, const Anchor& a) {
  if (const auto* s = std::get_if<TextSpan>(&a)) {
    j = Json{{"kind", "text"}, {"start", s->start}, {"end", s->end}};
  } else {
    const auto& r = std::get<PageRegion>(a);
    j = Json{{"kind", "page"}, {"page", r.page}, {"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}};
  }
}

void from_json(const Json& j, Anchor& a) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "text") {
    a = TextSpan{j.at("start").get<std::size_t>(), j.at("end").get<std::size_t>()};
  } else if (kind == "page") {
    a = PageRegion{j.at("page").get<std::size_t>(), j.at("x").get<double>(), j.at("y").get<double>(),
                   j.at("w").get<double>(), j.at("h").get<double>()};
  } else {
    throw Error(ErrorCode::Validation, "anchor kind must be 'text' or 'page'");
  }
}

namespace {

std::string_view media_name(MediaKind k) {
  switch (k) {
    case MediaKind::Image: return "image";
    case MediaKind::Audio: return "audio";
    case MediaKind::Video: return "video";
  }
  return "image";
}

MediaKind media_from(std::string_view s) {
  if (s == "image") return MediaKind::Image;
  if (s == "audio") return MediaKind::Audio;
  if (s == "video") return MediaKind::Video;
  throw Error(ErrorCode::InvalidContent, "media kind must be image, audio or video");
}

}  // namespace

void to_json(Json& j, const ContentBlock& b) {
  if (const auto* rt = std::get_if<RichText>(&b)) {
    j = Json{{"kind", "rich_text"}, {"html", rt->html}};
  } else if (const auto* m = std::get_if<MediaRef>(&b)) {
    j = Json{{"kind", "media"}, {"media", media_name(m->kind)}, {"uri", m->uri}};
  } else {
    const auto& l = std::get<Link>(b);
    j = Json{{"kind", "link"}, {"uri", l.uri}, {"label", l.label}};
  }
}

void from_json(const Json& j, ContentBlock& b) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "rich_text") {
    b = RichText{j.at("html").get<std::string>()};
  } else if (kind == "media") {
    b = MediaRef{media_from(j.at("media").get<std::string>()), j.at("uri").get<std::string>()};
  } else if (kind == "link") {
    b = Link{j.at("uri").get<std::string>(), j.value("label", "")};
  } else {
    throw Error(ErrorCode::InvalidContent, "unknown content block kind '" + kind + "'");
  }
}

void to_json(Json& j, const Content& c) { j = c.blocks; }
void from_json(const Json& j, Content& c) { c.blocks = j.get<std::vector<ContentBlock>>(); }

void to_json(Json& j, const Annotation& a) {
  j = Json{{"id", a.id},
           {"activity_id", a.activity_id},
           {"author", a.author},
           {"anchor", a.anchor},
           {"content", a.content},
           {"classification", a.classification},
           {"created", a.created},
           {"updated", a.updated},
           {"revision", a.revision}};
}

void from_json(const Json& j, Annotation& a) {
  a.id = j.value("id", "");
  a.activity_id = j.value("activity_id", "");
  a.author = j.value("author", "");
  a.anchor = j.at("anchor").get<Anchor>();
  a.content = j.at("content").get<Content>();
  a.classification = j.at("classification").get<ConceptSet>();
  a.created = j.value("created", "");
  a.updated = j.value("updated", "");
  a.revision = j.value("revision", std::uint64_t{0});
}

void to_json(Json& j, const Activity& a) {
  j = Json{{"id", a.id},
           {"title", a.title},
           {"document_id", a.document_id},
           {"group_id", a.group_id},
           {"owner", a.owner},
           {"source_ontology_id", a.source_ontology_id},
           {"snapshot", a.snapshot},
           {"state", to_string(a.state)},
           {"annotations_visible_to_group", a.annotations_visible_to_group}};
}

void from_json(const Json& j, Activity& a) {
  a.id = j.at("id").get<std::string>();
  a.title = j.at("title").get<std::string>();
  a.document_id = j.at("document_id").get<std::string>();
  a.group_id = j.at("group_id").get<std::string>();
  a.owner = j.at("owner").get<std::string>();
  a.source_ontology_id = j.value("source_ontology_id", "");
  a.snapshot = j.at("snapshot").get<Ontology>();
  a.state = activity_state_from_string(j.at("state").get<std::string>());
  a.annotations_visible_to_group = j.value("annotations_visible_to_group", true);
}

void to_json(Json& j, const GradeRecord& g) {
  j = Json{{"activity_id", g.activity_id}, {"student_id", g.student_id}, {"grade", g.grade}};
  if (g.letter) j["letter"] = std::string(1, *g.letter);
}

void from_json(const Json& j, GradeRecord& g) {
  g.activity_id = j.at("activity_id").get<std::string>();
  g.student_id = j.at("student_id").get<std::string>();
  g.grade = j.at("grade").get<double>();
  g.letter.reset();
  if (j.contains("letter")) {
    const auto s = j.at("letter").get<std::string>();
    if (s.size() != 1) throw Error(ErrorCode::InvalidGrade, "letter must be a single character");
    g.letter = s[0];
  }
}

Json query_to_json(const Query& q, const Ontology& o) {
  Json criteria = Json::array();
  for (const auto& c : q.criteria) {
    Json literals = Json::array();
    for (const auto& lit : c.literals) {
      literals.push_back(Json{{"sign", lit.sign == Sign::Asserted ? "+" : "-"},
                              {"concept", lit.concept_id},
                              {"path", concept_reference(o, lit.concept_id)}});
    }
    criteria.push_back(Json{{"name", c.name}, {"literals", literals}});
  }
  return Json{{"text", serialize_query(q, o)}, {"criteria", criteria}};
}

}  // namespace ontonote
