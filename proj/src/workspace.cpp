#include "ontonote/workspace.hpp"

#include <algorithm>

#include "ontonote/json_io.hpp"

namespace ontonote {

namespace {

constexpr int kArchiveVersion = 1;
constexpr int kMaxCasRetries = 64;

Annotation annotation_from(const Envelope& e) {
  auto a = e.payload.get<Annotation>();
  a.id = e.id;
  a.revision = e.revision;
  return a;
}

Json annotation_payload(const Annotation& a) {
  Json j = a;
  j.erase("revision");
  return j;
}

Ontology ontology_from(const Envelope& e) {
  auto o = e.payload.get<Ontology>();
  o.id = e.id;
  return o;
}

Activity activity_from(const Envelope& e) {
  auto a = e.payload.get<Activity>();
  a.id = e.id;
  a.snapshot.id = e.id;
  return a;
}

Ontology apply_batch(Ontology o, const std::vector<EditOp>& ops, const ConceptSet& usage) {
  for (const auto& op : ops) o = apply_edit(o, op, usage);
  return o;
}

}  // namespace

Workspace::Workspace(Store& store, Clock clock) : store_(store), clock_(std::move(clock)) {}

User Workspace::add_user(const User& u) {
  store_.put_new(EntityKind::User, Json(u), u.id);
  return u;
}

User Workspace::get_user(const std::string& id) const {
  const auto e = store_.get(EntityKind::User, id);
  if (!e) throw Error(ErrorCode::UnknownUser, "unknown user '" + id + "'");
  return e->payload.get<User>();
}

std::optional<User> Workspace::find_user_by_token(std::string_view token) const {
  if (token.empty()) return std::nullopt;
  for (const auto& e : store_.list(EntityKind::User)) {
    auto u = e.payload.get<User>();
    if (u.token == token) return u;
  }
  return std::nullopt;
}

Group Workspace::create_group(std::string name, const std::set<std::string>& members) {
  for (const auto& m : members) {
    if (get_user(m).role != Role::Student) {
      throw Error(ErrorCode::Validation, "group member '" + m + "' is not a student");
    }
  }
  Group g{"", std::move(name), members};
  const auto e = store_.put_new(EntityKind::Group, Json(g));
  g.id = e.id;
  return g;
}

Group Workspace::get_group(const std::string& id) const {
  const auto e = store_.get(EntityKind::Group, id);
  if (!e) throw Error(ErrorCode::UnknownGroup, "unknown group '" + id + "'");
  auto g = e->payload.get<Group>();
  g.id = e->id;
  return g;
}

Document Workspace::add_document(Document d) {
  check_document(d);
  const auto e = store_.put_new(EntityKind::Document, Json(d));
  d.id = e.id;
  return d;
}

Document Workspace::get_document(const std::string& id) const {
  const auto e = store_.get(EntityKind::Document, id);
  if (!e) throw Error(ErrorCode::UnknownDocument, "unknown document '" + id + "'");
  auto d = e->payload.get<Document>();
  d.id = e->id;
  return d;
}

Ontology Workspace::create_ontology(std::string_view bracket, const std::string& owner, Visibility visibility) {
  Ontology o = parse_bracket(bracket);
  o.owner = owner;
  o.visibility = visibility;
  const auto e = store_.put_new(EntityKind::Ontology, Json(o));
  o.id = e.id;
  return o;
}

Ontology Workspace::get_ontology(const std::string& id) const {
  const auto e = store_.get(EntityKind::Ontology, id);
  if (!e) throw Error(ErrorCode::UnknownOntology, "unknown ontology '" + id + "'");
  return ontology_from(*e);
}

Ontology Workspace::edit_ontology(const std::string& id, std::uint64_t expected_revision,
                                  const std::vector<EditOp>& ops) {
  const auto current = store_.get(EntityKind::Ontology, id);
  if (!current) throw Error(ErrorCode::UnknownOntology, "unknown ontology '" + id + "'");
  const Ontology o = ontology_from(*current);
  if (o.revision != expected_revision) {
    throw ConflictError(*current, "ontology " + id + " is at revision " + std::to_string(o.revision) +
                                      ", expected " + std::to_string(expected_revision));
  }
  // Source ontologies classify nothing directly; activities hold snapshots.
  const Ontology next = apply_batch(o, ops, {});
  store_.cas_update(EntityKind::Ontology, id, current->revision, Json(next));
  for (const auto& op : ops) store_.append_log(EntityKind::Ontology, id, Json(op));
  return next;
}

Activity Workspace::create_activity(std::string title, const std::string& document_id, const std::string& group_id,
                                    const std::string& ontology_id, const std::string& owner) {
  const Document doc = get_document(document_id);
  const Group group = get_group(group_id);
  const Ontology source = get_ontology(ontology_id);
  if (source.visibility == Visibility::Private && source.owner != owner) {
    throw Error(ErrorCode::Forbidden, "ontology '" + ontology_id + "' is private to its owner");
  }
  Activity a = make_activity("", std::move(title), doc, group, source, owner);
  const auto e = store_.put_new(EntityKind::Activity, Json(a));
  return activity_from(e);
}

Activity Workspace::get_activity(const std::string& id) const {
  const auto e = store_.get(EntityKind::Activity, id);
  if (!e) throw Error(ErrorCode::UnknownActivity, "unknown activity '" + id + "'");
  return activity_from(*e);
}

Activity Workspace::write_activity(const Envelope& current, const Activity& next) {
  store_.cas_update(EntityKind::Activity, current.id, current.revision, Json(next));
  return next;
}

Activity Workspace::set_state(const std::string& id, ActivityState state) {
  const auto e = store_.get(EntityKind::Activity, id);
  if (!e) throw Error(ErrorCode::UnknownActivity, "unknown activity '" + id + "'");
  const Activity a = activity_from(*e);
  return write_activity(*e, transition(a, state, get_group(a.group_id)));
}

Activity Workspace::set_group_visibility(const std::string& id, bool visible) {
  const auto e = store_.get(EntityKind::Activity, id);
  if (!e) throw Error(ErrorCode::UnknownActivity, "unknown activity '" + id + "'");
  Activity a = activity_from(*e);
  a.annotations_visible_to_group = visible;
  return write_activity(*e, a);
}

Activity Workspace::edit_snapshot(const std::string& id, std::uint64_t expected_revision,
                                  const std::vector<EditOp>& ops) {
  for (int attempt = 0;; ++attempt) {
    const auto e = store_.get(EntityKind::Activity, id);
    if (!e) throw Error(ErrorCode::UnknownActivity, "unknown activity '" + id + "'");
    Activity a = activity_from(*e);
    if (a.snapshot.revision != expected_revision) {
      throw ConflictError(*e, "snapshot of " + id + " is at revision " + std::to_string(a.snapshot.revision) +
                                  ", expected " + std::to_string(expected_revision));
    }
    if (a.state == ActivityState::Closed) {
      throw Error(ErrorCode::InvalidStateTransition, "closed activities are read-only");
    }
    const ConceptSet usage = concept_usage(list_annotations(id));
    a.snapshot = apply_batch(a.snapshot, ops, usage);
    try {
      write_activity(*e, a);
    } catch (const ConflictError&) {
      // Another write (state change, proposal) raced us; retry only while the
      // snapshot itself is still at the revision the caller expects.
      if (attempt >= kMaxCasRetries) throw;
      continue;
    }
    for (const auto& op : ops) store_.append_log(EntityKind::Activity, id, Json(op));
    return a;
  }
}

Activity Workspace::propose_concept(const std::string& id, const ConceptId& parent, std::string_view name,
                                    const std::string& author) {
  for (int attempt = 0;; ++attempt) {
    const auto e = store_.get(EntityKind::Activity, id);
    if (!e) throw Error(ErrorCode::UnknownActivity, "unknown activity '" + id + "'");
    Activity a = activity_from(*e);
    if (a.state != ActivityState::Open) throw Error(ErrorCode::ActivityNotOpen, "activity is not open");
    if (get_group(a.group_id).members.count(author) == 0) {
      throw Error(ErrorCode::AuthorNotInGroup, "'" + author + "' is not in the activity group");
    }
    a.snapshot = propose_final(a.snapshot, parent, name, author, clock_());
    try {
      write_activity(*e, a);
    } catch (const ConflictError&) {
      if (attempt >= kMaxCasRetries) throw;
      continue;
    }
    Json entry{{"op", "propose"}, {"parent", parent}, {"name", name}, {"author", author}};
    store_.append_log(EntityKind::Activity, id, entry);
    return a;
  }
}

Annotation Workspace::add_annotation(const std::string& activity_id, const std::string& author,
                                     const Anchor& anchor, const Content& content,
                                     const ConceptSet& classification) {
  const Activity activity = get_activity(activity_id);
  if (activity.state != ActivityState::Open) {
    throw Error(ErrorCode::ActivityNotOpen, "activity '" + activity_id + "' is not open");
  }
  if (get_group(activity.group_id).members.count(author) == 0) {
    throw Error(ErrorCode::AuthorNotInGroup, "'" + author + "' is not in the activity group");
  }
  check_classification(activity.snapshot, classification);
  check_anchor(get_document(activity.document_id), anchor);

  Annotation a;
  a.activity_id = activity_id;
  a.author = author;
  a.anchor = anchor;
  a.content = sanitize_content(content);
  a.classification = classification;
  a.created = clock_();
  a.updated = a.created;
  const auto e = store_.put_new(EntityKind::Annotation, annotation_payload(a));
  a.id = e.id;
  a.revision = e.revision;
  return a;
}

Annotation Workspace::update_annotation(const std::string& annotation_id, const std::string& actor,
                                        std::optional<std::uint64_t> expected_revision,
                                        const AnnotationPatch& patch) {
  const auto e = store_.get(EntityKind::Annotation, annotation_id);
  if (!e) throw Error(ErrorCode::NotFound, "annotation '" + annotation_id + "' not found");
  Annotation a = annotation_from(*e);
  if (a.author != actor) throw Error(ErrorCode::Forbidden, "only the author may edit an annotation");
  const Activity activity = get_activity(a.activity_id);
  if (activity.state != ActivityState::Open) {
    throw Error(ErrorCode::ActivityNotOpen, "activity '" + a.activity_id + "' is not open");
  }
  if (patch.anchor) {
    check_anchor(get_document(activity.document_id), *patch.anchor);
    a.anchor = *patch.anchor;
  }
  if (patch.content) a.content = sanitize_content(*patch.content);
  if (patch.classification) {
    check_classification(activity.snapshot, *patch.classification);
    a.classification = *patch.classification;
  }
  a.updated = clock_();
  const auto written = store_.cas_update(EntityKind::Annotation, annotation_id,
                                         expected_revision.value_or(e->revision), annotation_payload(a));
  a.revision = written.revision;
  return a;
}

Annotation Workspace::get_annotation(const std::string& id) const {
  const auto e = store_.get(EntityKind::Annotation, id);
  if (!e) throw Error(ErrorCode::NotFound, "annotation '" + id + "' not found");
  return annotation_from(*e);
}

std::vector<Annotation> Workspace::list_annotations(const std::string& activity_id,
                                                    const std::optional<std::string>& author) const {
  if (!store_.get(EntityKind::Activity, activity_id)) {
    throw Error(ErrorCode::UnknownActivity, "unknown activity '" + activity_id + "'");
  }
  std::vector<Annotation> out;
  for (const auto& e : store_.list(EntityKind::Annotation)) {
    if (e.payload.value("activity_id", "") != activity_id) continue;
    if (author && e.payload.value("author", "") != *author) continue;
    out.push_back(annotation_from(e));
  }
  sort_for_listing(out);
  return out;
}

std::vector<Violation> Workspace::validate_annotation(const Annotation& a) const {
  const auto e = store_.get(EntityKind::Activity, a.activity_id);
  if (!e) return {{ErrorCode::UnknownActivity, "unknown activity '" + a.activity_id + "'"}};
  const Activity activity = activity_from(*e);
  return ontonote::validate_annotation(activity, get_document(activity.document_id), get_group(activity.group_id),
                                       a);
}

GradeRecord Workspace::set_grade(const std::string& activity_id, const std::string& student_id, double grade,
                                 std::optional<char> letter) {
  const Activity activity = get_activity(activity_id);
  if (get_group(activity.group_id).members.count(student_id) == 0) {
    throw Error(ErrorCode::AuthorNotInGroup, "'" + student_id + "' is not in the activity group");
  }
  const GradeRecord g = make_grade(activity_id, student_id, grade, letter);
  const std::string id = activity_id + "__" + student_id;
  for (int attempt = 0;; ++attempt) {
    try {
      if (const auto e = store_.get(EntityKind::Grade, id)) {
        store_.cas_update(EntityKind::Grade, id, e->revision, Json(g));
      } else {
        store_.put_new(EntityKind::Grade, Json(g), id);
      }
      return g;
    } catch (const Error& err) {
      const bool raced = err.code() == ErrorCode::Conflict || err.code() == ErrorCode::AlreadyExists;
      if (!raced || attempt >= kMaxCasRetries) throw;
    }
  }
}

std::vector<GradeRecord> Workspace::grades(const std::string& activity_id) const {
  std::vector<GradeRecord> out;
  for (const auto& e : store_.list(EntityKind::Grade)) {
    if (e.payload.value("activity_id", "") == activity_id) out.push_back(e.payload.get<GradeRecord>());
  }
  std::sort(out.begin(), out.end(),
            [](const GradeRecord& a, const GradeRecord& b) { return a.student_id < b.student_id; });
  return out;
}

std::string Workspace::export_archive(const std::string& activity_id) const {
  const auto activity = store_.get(EntityKind::Activity, activity_id);
  if (!activity) throw Error(ErrorCode::NotFound, "activity '" + activity_id + "' not found");
  const Activity a = activity_from(*activity);
  const Envelope doc = store_.require(EntityKind::Document, a.document_id);
  const Envelope group = store_.require(EntityKind::Group, a.group_id);

  Json users = Json::array();
  for (const auto& member : group.payload.get<Group>().members) {
    if (auto u = store_.get(EntityKind::User, member)) {
      u->payload.erase("token");
      users.push_back(envelope_to_json(*u));
    }
  }
  Json annotations = Json::array();
  Json grades = Json::array();
  for (const auto& e : store_.list(EntityKind::Annotation)) {
    if (e.payload.value("activity_id", "") == activity_id) annotations.push_back(envelope_to_json(e));
  }
  for (const auto& e : store_.list(EntityKind::Grade)) {
    if (e.payload.value("activity_id", "") == activity_id) grades.push_back(envelope_to_json(e));
  }
  Json archive{{"archive_version", kArchiveVersion},
               {"activity", envelope_to_json(*activity)},
               {"document", envelope_to_json(doc)},
               {"group", envelope_to_json(group)},
               {"users", users},
               {"annotations", annotations},
               {"grades", grades},
               {"snapshot_log", store_.read_log(EntityKind::Activity, activity_id)}};
  return archive.dump(2) + "\n";
}

Activity Workspace::import_archive(std::string_view bytes) {
  struct Parsed {
    Envelope activity, document, group;
    std::vector<Envelope> users, annotations, grades;
    std::vector<Json> log;
  } parsed;

  try {
    const Json j = Json::parse(bytes);
    if (!j.is_object() || j.value("archive_version", 0) != kArchiveVersion) {
      throw Error(ErrorCode::CorruptArchive, "unsupported archive_version");
    }
    auto read = [](EntityKind kind, const Json& e) {
      Envelope env = envelope_from_json(kind, e);
      validate_payload(kind, env.payload);
      return env;
    };
    parsed.activity = read(EntityKind::Activity, j.at("activity"));
    parsed.document = read(EntityKind::Document, j.at("document"));
    parsed.group = read(EntityKind::Group, j.at("group"));
    for (const auto& u : j.at("users")) parsed.users.push_back(read(EntityKind::User, u));
    for (const auto& a : j.at("annotations")) parsed.annotations.push_back(read(EntityKind::Annotation, a));
    for (const auto& g : j.at("grades")) parsed.grades.push_back(read(EntityKind::Grade, g));
    for (const auto& l : j.value("snapshot_log", Json::array())) parsed.log.push_back(l);

    const Activity a = activity_from(parsed.activity);
    if (a.document_id != parsed.document.id || a.group_id != parsed.group.id) {
      throw Error(ErrorCode::CorruptArchive, "archive references do not match its entities");
    }
    for (const auto& ann : parsed.annotations) {
      if (ann.payload.value("activity_id", "") != a.id) {
        throw Error(ErrorCode::CorruptArchive, "annotation " + ann.id + " belongs to another activity");
      }
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::CorruptArchive, std::string("corrupt archive: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptArchive) throw;
    throw Error(ErrorCode::CorruptArchive, std::string("corrupt archive: ") + e.what());
  }

  if (store_.get(EntityKind::Activity, parsed.activity.id)) {
    throw Error(ErrorCode::AlreadyExists, "activity '" + parsed.activity.id + "' already exists");
  }
  for (const auto& ann : parsed.annotations) {
    if (store_.get(EntityKind::Annotation, ann.id)) {
      throw Error(ErrorCode::AlreadyExists, "annotation '" + ann.id + "' already exists");
    }
  }
  // Shared entities may already be present from an earlier import.
  auto put_shared = [this](const Envelope& e) {
    if (const auto existing = store_.get(e.kind, e.id)) {
      Json mine = existing->payload;
      mine.erase("token");
      if (mine != e.payload) {
        throw Error(ErrorCode::AlreadyExists, std::string(directory_name(e.kind)) + " '" + e.id +
                                                  "' exists with different content");
      }
      return;
    }
    store_.put_verbatim(e);
  };
  for (const auto& u : parsed.users) put_shared(u);
  put_shared(parsed.document);
  put_shared(parsed.group);
  for (const auto& g : parsed.grades) {
    if (!store_.get(EntityKind::Grade, g.id)) store_.put_verbatim(g);
  }
  for (const auto& ann : parsed.annotations) store_.put_verbatim(ann);
  store_.put_verbatim(parsed.activity);
  for (const auto& entry : parsed.log) store_.append_log(EntityKind::Activity, parsed.activity.id, entry);
  return activity_from(parsed.activity);
}

}  // namespace ontonote
