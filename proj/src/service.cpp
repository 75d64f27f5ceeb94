#include "ontonote/service.hpp"

#include <algorithm>

#include <httplib.h>

#include "ontonote/query.hpp"
#include "ontonote/reports.hpp"
#include "ontonote/utf8.hpp"

namespace ontonote {

Json annotation_view(const Annotation& a, const Ontology& snapshot) {
  Json j = a;
  Json refs = Json::array();
  for (const auto& c : a.classification) {
    refs.push_back(find_concept(snapshot, c) ? Json(concept_reference(snapshot, c)) : Json(nullptr));
  }
  j["concepts"] = refs;
  return j;
}

Json activity_view(const Activity& a) {
  Json j = a;
  j["snapshot_bracket"] = serialize_bracket(a.snapshot);
  return j;
}

Json ontology_view(const Ontology& o) {
  Json j = o;
  j["bracket"] = serialize_bracket(o);
  const auto m = metrics(o);
  j["metrics"] = Json{{"concepts", m.concepts},
                      {"intermediates", m.intermediates},
                      {"finals", m.finals},
                      {"depth", m.depth},
                      {"avg_branching", m.average_branching() ? Json(round4(*m.average_branching())) : Json()}};
  return j;
}

Json annotation_query_response(const Workspace& ws, const std::string& activity_id, const AnnotationQuery& request,
                               const std::function<bool(const Annotation&)>& visible) {
  if (request.q && request.concepts) {
    throw Error(ErrorCode::BadRequest, "use either q or concepts, not both");
  }
  const Activity activity = ws.get_activity(activity_id);
  const Ontology& o = activity.snapshot;
  std::vector<Annotation> listed = ws.list_annotations(activity_id, request.author);
  if (visible) std::erase_if(listed, [&](const Annotation& a) { return !visible(a); });

  Json out{{"activity_id", activity_id}, {"mode", "all"}, {"query", nullptr}};
  std::optional<Query> q;
  if (request.q) {
    q = parse_query(*request.q, o);
    out["mode"] = "query";
  } else if (request.concepts) {
    q = basic_to_query(parse_concept_list(*request.concepts, o));
    out["mode"] = "concepts";
  }
  if (q) {
    listed = filter(listed, *q, o);
    out["query"] = query_to_json(*q, o);
  }
  Json views = Json::array();
  for (const auto& a : listed) views.push_back(annotation_view(a, o));
  out["count"] = listed.size();
  out["annotations"] = std::move(views);
  return out;
}

std::string render_json(const Json& j) { return j.dump(2) + "\n"; }

Json error_body(const Error& e) {
  Json j{{"code", to_string(e.code())}, {"message", e.what()}, {"status", http_status(e.code())}};
  if (const auto& p = e.position()) {
    j["position"] = Json{{"line", p->line}, {"column", p->column}, {"offset", p->offset}};
  }
  return j;
}

namespace {

struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

Reply json_reply(int status, const Json& j) { return {status, render_json(j), "application/json"}; }

// Revision a client compares against: the ontology revision for ontologies
// and activity snapshots, the envelope revision otherwise.
std::uint64_t client_revision(const Envelope& e) {
  if (e.kind == EntityKind::Ontology) return e.payload.value("revision", std::uint64_t{0});
  if (e.kind == EntityKind::Activity && e.payload.contains("snapshot")) {
    return e.payload["snapshot"].value("revision", std::uint64_t{0});
  }
  return e.revision;
}

Reply error_reply(const Error& e) {
  Json body = error_body(e);
  if (const auto* conflict = dynamic_cast<const ConflictError*>(&e)) {
    body["current_revision"] = client_revision(conflict->current());
  }
  return {http_status(e.code()), render_json(body), "application/json"};
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

std::uint64_t expected_revision_header(const httplib::Request& req, bool required) {
  const std::string v = req.get_header_value("Expected-Revision");
  if (v.empty()) {
    if (required) throw Error(ErrorCode::BadRequest, "missing Expected-Revision header");
    return 0;
  }
  try {
    std::size_t used = 0;
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadRequest, "Expected-Revision must be a non-negative integer");
  }
}

void require_instructor(const User& u) {
  if (u.role != Role::Instructor) throw Error(ErrorCode::Forbidden, "instructor role required");
}

Json body_json(const httplib::Request& req) { return parse_json(req.body, "request body"); }

std::string string_field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::Validation, std::string("field '") + key + "' must be a string");
  }
  return j[key].get<std::string>();
}

// "classification" holds concept ids, "concepts" holds paths; both may be given.
std::optional<ConceptSet> classification_from(const Json& body, const Ontology& o) {
  if (!body.contains("classification") && !body.contains("concepts")) return std::nullopt;
  ConceptSet out;
  if (body.contains("classification")) out = decode<ConceptSet>(body["classification"], "classification");
  if (body.contains("concepts")) {
    for (const auto& path : decode<std::vector<std::string>>(body["concepts"], "concepts")) {
      out.insert(resolve_path(o, path));
    }
  }
  return out;
}

class Routes {
 public:
  explicit Routes(Workspace& ws) : ws_(ws) {}

  void install(httplib::Server& s) {
    s.Get("/meta/errors", [](const httplib::Request&, httplib::Response& res) {
      Json codes = Json::array();
      for (const auto c : all_error_codes()) codes.push_back({{"code", to_string(c)}, {"status", http_status(c)}});
      res.set_content(render_json(codes), "application/json");
    });

    s.Post("/groups", wrap(&Routes::create_group, true));
    s.Get(R"(/groups/([^/]+))", wrap(&Routes::get_group, false));
    s.Post("/documents", wrap(&Routes::create_document, true));
    s.Get(R"(/documents/([^/]+))", wrap(&Routes::get_document, false));
    s.Post("/ontologies", wrap(&Routes::create_ontology, true));
    s.Post(R"(/ontologies/([^/]+)/ops)", wrap(&Routes::ontology_ops, true));
    s.Get(R"(/ontologies/([^/]+?)(\.bracket|\.json)?)", wrap(&Routes::get_ontology, false));

    s.Post("/activities", wrap(&Routes::create_activity, true));
    s.Get(R"(/activities/([^/]+))", wrap(&Routes::get_activity, false));
    s.Post(R"(/activities/([^/]+)/state)", wrap(&Routes::set_state, true));
    s.Post(R"(/activities/([^/]+)/ontology-ops)", wrap(&Routes::snapshot_ops, true));
    s.Post(R"(/activities/([^/]+)/proposals)", wrap(&Routes::propose, true));
    s.Post(R"(/activities/([^/]+)/annotations)", wrap(&Routes::add_annotation, true));
    s.Get(R"(/activities/([^/]+)/annotations)", wrap(&Routes::list_annotations, false));
    s.Patch(R"(/annotations/([^/]+))", wrap(&Routes::update_annotation, true));
    s.Get(R"(/annotations/([^/]+))", wrap(&Routes::get_annotation, false));
    s.Get(R"(/activities/([^/]+)/report)", wrap(&Routes::activity_report, false));
    s.Post("/reports/compare", wrap(&Routes::compare, false));

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      std::string what = "unexpected failure";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        what = e.what();
      } catch (...) {
      }
      const Reply r = error_reply(Error(ErrorCode::Internal, what));
      res.status = r.status;
      res.set_content(r.body, r.content_type);
    });
  }

 private:
  using Member = Reply (Routes::*)(const httplib::Request&, const User&);

  httplib::Server::Handler wrap(Member member, bool write) {
    return [this, member, write](const httplib::Request& req, httplib::Response& res) {
      Reply reply;
      try {
        const User user = authenticate(req);
        const std::string key = req.get_header_value("X-Idempotency-Key");
        if (write && !key.empty()) {
          const Json record =
              ws_.store().once(user.id + "\n" + req.method + "\n" + req.path + "\n" + key, [&] {
                const Reply r = (this->*member)(req, user);
                return Json{{"status", r.status}, {"body", r.body}, {"content_type", r.content_type}};
              });
          reply = {record.at("status").get<int>(), record.at("body").get<std::string>(),
                   record.at("content_type").get<std::string>()};
        } else {
          reply = (this->*member)(req, user);
        }
      } catch (const Error& e) {
        reply = error_reply(e);
      } catch (const Json::exception& e) {
        reply = error_reply(Error(ErrorCode::BadRequest, e.what()));
      }
      res.status = reply.status;
      res.set_content(reply.body, reply.content_type);
    };
  }

  User authenticate(const httplib::Request& req) const {
    const std::string header = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (header.size() <= kBearer.size() || header.compare(0, kBearer.size(), kBearer) != 0) {
      throw Error(ErrorCode::Unauthorized, "missing bearer token");
    }
    auto user = ws_.find_user_by_token(std::string_view(header).substr(kBearer.size()));
    if (!user) throw Error(ErrorCode::Unauthorized, "unknown bearer token");
    return *user;
  }

  // Instructors read everything; students read activities of their group.
  Activity readable_activity(const std::string& id, const User& u) const {
    Activity a = ws_.get_activity(id);
    if (u.role != Role::Instructor && ws_.get_group(a.group_id).members.count(u.id) == 0) {
      throw Error(ErrorCode::Forbidden, "not a member of this activity's group");
    }
    return a;
  }

  Reply create_group(const httplib::Request& req, const User& u) {
    require_instructor(u);
    const Json body = body_json(req);
    const auto members = decode<std::set<std::string>>(body.value("members", Json::array()), "members");
    return json_reply(201, Json(ws_.create_group(string_field(body, "name"), members)));
  }

  Reply get_group(const httplib::Request& req, const User& u) {
    const Group g = ws_.get_group(req.matches[1]);
    if (u.role != Role::Instructor && g.members.count(u.id) == 0) {
      throw Error(ErrorCode::Forbidden, "not a member of this group");
    }
    return json_reply(200, Json(g));
  }

  Reply create_document(const httplib::Request& req, const User& u) {
    require_instructor(u);
    return json_reply(201, Json(ws_.add_document(decode<Document>(body_json(req), "document"))));
  }

  Reply get_document(const httplib::Request& req, const User&) {
    return json_reply(200, Json(ws_.get_document(req.matches[1])));
  }

  Reply create_ontology(const httplib::Request& req, const User& u) {
    require_instructor(u);
    const auto visibility = visibility_from_string(param(req, "visibility").value_or("private"));
    return json_reply(201, ontology_view(ws_.create_ontology(req.body, u.id, visibility)));
  }

  Ontology readable_ontology(const std::string& id, const User& u) const {
    Ontology o = ws_.get_ontology(id);
    if (o.visibility == Visibility::Private && o.owner != u.id) {
      throw Error(ErrorCode::Forbidden, "ontology '" + id + "' is private");
    }
    return o;
  }

  Reply get_ontology(const httplib::Request& req, const User& u) {
    const Ontology o = readable_ontology(req.matches[1], u);
    if (req.matches[2] == ".bracket") return {200, serialize_bracket(o) + "\n", "text/plain; charset=utf-8"};
    return json_reply(200, ontology_view(o));
  }

  Reply ontology_ops(const httplib::Request& req, const User& u) {
    require_instructor(u);
    const std::string id = req.matches[1];
    if (ws_.get_ontology(id).owner != u.id) throw Error(ErrorCode::Forbidden, "only the owner edits an ontology");
    const auto ops = decode<std::vector<EditOp>>(body_json(req), "edit operations");
    return json_reply(200, ontology_view(ws_.edit_ontology(id, expected_revision_header(req, true), ops)));
  }

  Reply create_activity(const httplib::Request& req, const User& u) {
    require_instructor(u);
    const Json body = body_json(req);
    Activity a = ws_.create_activity(body.value("title", ""), string_field(body, "document_id"),
                                     string_field(body, "group_id"), string_field(body, "ontology_id"), u.id);
    if (body.contains("annotations_visible_to_group")) {
      a = ws_.set_group_visibility(a.id, decode<bool>(body["annotations_visible_to_group"], "visibility flag"));
    }
    return json_reply(201, activity_view(a));
  }

  Reply get_activity(const httplib::Request& req, const User& u) {
    return json_reply(200, activity_view(readable_activity(req.matches[1], u)));
  }

  Reply set_state(const httplib::Request& req, const User& u) {
    require_instructor(u);
    const Json body = body_json(req);
    const auto state = activity_state_from_string(string_field(body, "state"));
    return json_reply(200, activity_view(ws_.set_state(req.matches[1], state)));
  }

  Reply snapshot_ops(const httplib::Request& req, const User& u) {
    require_instructor(u);
    const auto ops = decode<std::vector<EditOp>>(body_json(req), "edit operations");
    return json_reply(200,
                      activity_view(ws_.edit_snapshot(req.matches[1], expected_revision_header(req, true), ops)));
  }

  Reply propose(const httplib::Request& req, const User& u) {
    const std::string id = req.matches[1];
    const Json body = body_json(req);
    const std::string name = string_field(body, "name");
    const ConceptId parent = resolve_path(ws_.get_activity(id).snapshot, string_field(body, "parent"));
    const Activity a = ws_.propose_concept(id, parent, name, u.id);
    Json created;
    for (const auto& child : get_concept(a.snapshot, parent).children) {
      if (child.name == utf8::trim(name)) created = Json{{"id", child.id}, {"name", child.name}};
    }
    if (!created.is_null()) created["path"] = concept_reference(a.snapshot, created["id"].get<ConceptId>());
    return json_reply(201, Json{{"concept", created}, {"activity", activity_view(a)}});
  }

  Reply add_annotation(const httplib::Request& req, const User& u) {
    const std::string id = req.matches[1];
    const Json body = body_json(req);
    if (!body.is_object()) throw Error(ErrorCode::Validation, "annotation body must be an object");
    const Activity activity = ws_.get_activity(id);
    const ConceptSet classification = classification_from(body, activity.snapshot).value_or(ConceptSet{});
    const Annotation a = ws_.add_annotation(id, u.id, decode<Anchor>(body.at("anchor"), "anchor"),
                                            decode<Content>(body.at("content"), "content"), classification);
    return json_reply(201, annotation_view(a, activity.snapshot));
  }

  Reply update_annotation(const httplib::Request& req, const User& u) {
    const std::string id = req.matches[1];
    const Json body = body_json(req);
    if (!body.is_object()) throw Error(ErrorCode::Validation, "annotation patch must be an object");
    const Activity activity = ws_.get_activity(ws_.get_annotation(id).activity_id);
    AnnotationPatch patch;
    if (body.contains("anchor")) patch.anchor = decode<Anchor>(body["anchor"], "anchor");
    if (body.contains("content")) patch.content = decode<Content>(body["content"], "content");
    patch.classification = classification_from(body, activity.snapshot);
    std::optional<std::uint64_t> expected;
    if (req.has_header("Expected-Revision")) expected = expected_revision_header(req, true);
    return json_reply(200, annotation_view(ws_.update_annotation(id, u.id, expected, patch), activity.snapshot));
  }

  Reply get_annotation(const httplib::Request& req, const User& u) {
    const Annotation a = ws_.get_annotation(req.matches[1]);
    const Activity activity = readable_activity(a.activity_id, u);
    if (u.role != Role::Instructor && !activity.annotations_visible_to_group && a.author != u.id) {
      throw Error(ErrorCode::Forbidden, "annotation is private to its author");
    }
    return json_reply(200, annotation_view(a, activity.snapshot));
  }

  Reply list_annotations(const httplib::Request& req, const User& u) {
    const std::string id = req.matches[1];
    const Activity activity = readable_activity(id, u);
    std::function<bool(const Annotation&)> visible;
    if (u.role != Role::Instructor && !activity.annotations_visible_to_group) {
      visible = [viewer = u.id](const Annotation& a) { return a.author == viewer; };
    }
    const AnnotationQuery q{param(req, "q"), param(req, "concepts"), param(req, "author")};
    return json_reply(200, annotation_query_response(ws_, id, q, visible));
  }

  Reply activity_report(const httplib::Request& req, const User& u) {
    require_instructor(u);
    const Activity a = ws_.get_activity(req.matches[1]);
    ReportOptions options;
    try {
      if (auto w = param(req, "bin_width")) options.bin_width = std::stod(*w);
      if (auto l = param(req, "level")) options.level = std::stod(*l);
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadRequest, "bin_width and level must be numbers");
    }
    const Json report = ontonote::activity_report(a, ws_.get_group(a.group_id), ws_.list_annotations(a.id), options);
    if (param(req, "format") == "csv") return {200, activity_report_csv(report), "text/csv"};
    return json_reply(200, report);
  }

  Reply compare(const httplib::Request& req, const User& u) {
    require_instructor(u);
    const Json body = body_json(req);
    if (!body.is_object()) throw Error(ErrorCode::Validation, "compare body must be an object");
    using Sample = std::map<std::string, double>;
    const auto before = decode<Sample>(body.value("before", Json::object()), "before sample");
    const auto after = decode<Sample>(body.value("after", Json::object()), "after sample");
    const Json report = compare_report(before, after, body.value("bin_width", 1.0), body.value("level", 0.95));
    if (param(req, "format") == "csv") return {200, compare_report_csv(report), "text/csv"};
    return json_reply(200, report);
  }

  Workspace& ws_;
};

}  // namespace

HttpService::HttpService(Workspace& ws) : server_(std::make_unique<httplib::Server>()) {
  auto routes = std::make_shared<Routes>(ws);
  routes->install(*server_);
  routes_ = std::move(routes);
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpService::run() { server_->listen_after_bind(); }

void HttpService::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace ontonote
