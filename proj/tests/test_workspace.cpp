#include <gtest/gtest.h>

#include <thread>

#include "fixture_store.hpp"
#include "ontonote/query.hpp"
#include "ontonote/workspace.hpp"
#include "support.hpp"

using namespace ontonote;
using namespace ontonote::testing;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Internal;
}

Content note(const std::string& text) { return Content{{RichText{text}}}; }

std::vector<std::string> ids(const std::vector<Annotation>& xs) {
  std::vector<std::string> out;
  for (const auto& a : xs) out.push_back(a.id);
  return out;
}

class WorkspaceTest : public ::testing::Test {
 protected:
  TempDir dir;
  Store store{dir.path()};
  Workspace ws{store};
  SampleStore f = build_sample_store(ws);

  Ontology snapshot() const { return ws.get_activity(f.activity).snapshot; }
};

}  // namespace

TEST_F(WorkspaceTest, SampleListingOrder) {
  const auto all = ws.list_annotations(f.activity);
  EXPECT_EQ(ids(all), f.annotations);
  EXPECT_EQ(labels(f, ids(ws.list_annotations(f.activity, "s1"))), (std::vector<std::string>{"a1", "a3", "a5"}));
  EXPECT_EQ(code_of([&] { ws.list_annotations("nope"); }), ErrorCode::UnknownActivity);
}

TEST_F(WorkspaceTest, QueriesOverTheSample) {
  const auto o = snapshot();
  const auto all = ws.list_annotations(f.activity);
  const Query list = basic_to_query(parse_concept_list("Cultural,Structure_type", o));
  EXPECT_EQ(labels(f, ids(filter(all, list, o))), kConceptListExpected);
  const Query named = parse_query("Narrative: +Narration -Plot; Criticism: +Criticism -Structure", o);
  EXPECT_EQ(labels(f, ids(filter(all, named, o))), kNamedQueryExpected);
}

TEST_F(WorkspaceTest, UsersAndGroups) {
  EXPECT_EQ(ws.find_user_by_token("tok-s1")->id, "s1");
  EXPECT_FALSE(ws.find_user_by_token("bogus").has_value());
  EXPECT_FALSE(ws.find_user_by_token("").has_value());
  EXPECT_EQ(code_of([&] { ws.get_user("ghost"); }), ErrorCode::UnknownUser);
  EXPECT_EQ(code_of([&] { ws.create_group("x", {"prof"}); }), ErrorCode::Validation);
  EXPECT_EQ(code_of([&] { ws.create_group("x", {"ghost"}); }), ErrorCode::UnknownUser);
  EXPECT_EQ(code_of([&] { ws.get_group("nope"); }), ErrorCode::UnknownGroup);
  EXPECT_EQ(ws.get_group(f.group).members, (std::set<std::string>{"s1", "s2"}));
}

TEST_F(WorkspaceTest, ActivityCreationChecksReferences) {
  EXPECT_EQ(code_of([&] { ws.create_activity("x", "nodoc", f.group, f.ontology, "prof"); }), ErrorCode::UnknownDocument);
  EXPECT_EQ(code_of([&] { ws.create_activity("x", f.document, "nogrp", f.ontology, "prof"); }), ErrorCode::UnknownGroup);
  EXPECT_EQ(code_of([&] { ws.create_activity("x", f.document, f.group, "noont", "prof"); }), ErrorCode::UnknownOntology);
  ws.add_user({"prof2", "Other", Role::Instructor, "tok-prof2"});
  const auto priv = ws.create_ontology("Root[A,B]", "prof", Visibility::Private);
  EXPECT_EQ(code_of([&] { ws.create_activity("x", f.document, f.group, priv.id, "prof2"); }), ErrorCode::Forbidden);
  EXPECT_NO_THROW(ws.create_activity("x", f.document, f.group, f.ontology, "prof2"));
}

TEST_F(WorkspaceTest, AnnotationRules) {
  const auto o = snapshot();
  const ConceptSet plot = ids_of(o, {"Plot"});
  EXPECT_EQ(code_of([&] { ws.add_annotation(f.activity, "s3", TextSpan{0, 1}, note("x"), plot); }),
            ErrorCode::AuthorNotInGroup);
  EXPECT_EQ(code_of([&] { ws.add_annotation(f.activity, "s1", TextSpan{0, 1}, note("x"), {}); }),
            ErrorCode::EmptyClassification);
  EXPECT_EQ(code_of([&] { ws.add_annotation(f.activity, "s1", TextSpan{0, 1}, note("x"), ids_of(o, {"Structure"})); }),
            ErrorCode::NonFinalConcept);
  EXPECT_EQ(code_of([&] { ws.add_annotation(f.activity, "s1", TextSpan{0, 1000}, note("x"), plot); }),
            ErrorCode::AnchorOutOfBounds);
  EXPECT_EQ(code_of([&] { ws.add_annotation(f.activity, "s1", TextSpan{0, 1}, Content{}, plot); }),
            ErrorCode::InvalidContent);
  const auto a = ws.add_annotation(f.activity, "s1", TextSpan{0, 1}, note("<script>x</script><em>ok</em>"), plot);
  EXPECT_EQ(std::get<RichText>(a.content.blocks[0]).html, "<em>ok</em>");
  EXPECT_EQ(a.created, a.updated);
  EXPECT_TRUE(ws.validate_annotation(ws.get_annotation(a.id)).empty());
}

TEST_F(WorkspaceTest, UpdateAnnotation) {
  const auto o = snapshot();
  const std::string id = f.annotations[0];
  EXPECT_EQ(code_of([&] { ws.update_annotation(id, "s2", std::nullopt, {}); }), ErrorCode::Forbidden);
  AnnotationPatch patch;
  patch.classification = ids_of(o, {"Setting"});
  const auto updated = ws.update_annotation(id, "s1", 0, patch);
  EXPECT_EQ(updated.revision, 1u);
  EXPECT_EQ(updated.classification, ids_of(o, {"Setting"}));
  EXPECT_GT(updated.updated, updated.created);
  EXPECT_EQ(code_of([&] { ws.update_annotation(id, "s1", 0, patch); }), ErrorCode::Conflict);
  patch.classification = ids_of(o, {"Analysis"});
  EXPECT_EQ(code_of([&] { ws.update_annotation(id, "s1", 1, patch); }), ErrorCode::NonFinalConcept);
  EXPECT_EQ(ws.get_annotation(id).classification, ids_of(o, {"Setting"}));
  EXPECT_EQ(code_of([&] { ws.get_annotation("missing"); }), ErrorCode::NotFound);
}

TEST_F(WorkspaceTest, ClosedActivityIsReadOnly) {
  ws.set_state(f.activity, ActivityState::Closed);
  const auto o = snapshot();
  EXPECT_EQ(code_of([&] { ws.add_annotation(f.activity, "s1", TextSpan{0, 1}, note("x"), ids_of(o, {"Plot"})); }),
            ErrorCode::ActivityNotOpen);
  EXPECT_EQ(code_of([&] { ws.update_annotation(f.annotations[0], "s1", std::nullopt, {}); }),
            ErrorCode::ActivityNotOpen);
  EXPECT_EQ(code_of([&] { ws.edit_snapshot(f.activity, 0, {edit::Rename{id_of(o, "Setting"), "Place"}}); }),
            ErrorCode::InvalidStateTransition);
  EXPECT_EQ(code_of([&] { ws.set_state(f.activity, ActivityState::Open); }), ErrorCode::InvalidStateTransition);
}

TEST_F(WorkspaceTest, SnapshotEditsRespectUsage) {
  const auto o = snapshot();
  EXPECT_EQ(code_of([&] { ws.edit_snapshot(f.activity, 0, {edit::Delete{id_of(o, "Plot")}}); }), ErrorCode::InUse);
  const auto a = ws.edit_snapshot(f.activity, 0,
                                  {edit::Rename{id_of(o, "Setting"), "Place"}, edit::Delete{id_of(o, "Setting")}});
  EXPECT_EQ(a.snapshot.revision, 2u);
  EXPECT_EQ(find_concept(a.snapshot, id_of(o, "Setting")), nullptr);
  EXPECT_EQ(code_of([&] { ws.edit_snapshot(f.activity, 0, {}); }), ErrorCode::Conflict);
  // A failing op leaves the whole batch unapplied.
  EXPECT_EQ(code_of([&] {
              ws.edit_snapshot(f.activity, 2, {edit::Rename{id_of(o, "Plot"), "Story"}, edit::Delete{id_of(o, "Analysis")}});
            }),
            ErrorCode::DeleteRoot);
  EXPECT_EQ(get_concept(snapshot(), id_of(o, "Plot")).name, "Plot");
  EXPECT_EQ(store.read_log(EntityKind::Activity, f.activity).size(), 2u);
  // The source ontology is untouched.
  EXPECT_NE(find_concept(ws.get_ontology(f.ontology), id_of(o, "Setting")), nullptr);
}

TEST_F(WorkspaceTest, SourceOntologyEditsAreRevisioned) {
  const auto o = ws.get_ontology(f.ontology);
  const auto next = ws.edit_ontology(f.ontology, 0, {edit::AddChild{id_of(o, "Structure"), "Theme"}});
  EXPECT_EQ(next.revision, 1u);
  EXPECT_EQ(code_of([&] { ws.edit_ontology(f.ontology, 0, {}); }), ErrorCode::Conflict);
  EXPECT_EQ(ws.get_ontology(f.ontology).revision, 1u);
  EXPECT_EQ(metrics(ws.get_ontology(f.ontology)).concepts, 12u);
  // Existing activity snapshots keep the old tree.
  EXPECT_EQ(metrics(snapshot()).concepts, 11u);
}

TEST_F(WorkspaceTest, StudentProposals) {
  const auto o = snapshot();
  EXPECT_EQ(code_of([&] { ws.propose_concept(f.activity, id_of(o, "Criticism"), "Feminist", "s1"); }),
            ErrorCode::NotExtensible);
  ws.edit_snapshot(f.activity, 0, {edit::SetExtensible{id_of(o, "Criticism"), true}});
  EXPECT_EQ(code_of([&] { ws.propose_concept(f.activity, id_of(o, "Criticism"), "Feminist", "s3"); }),
            ErrorCode::AuthorNotInGroup);
  const auto a = ws.propose_concept(f.activity, id_of(o, "Criticism"), "Feminist", "s1");
  const ConceptSet fem = ids_of(a.snapshot, {"Feminist"});
  const auto& c = get_concept(a.snapshot, *fem.begin());
  EXPECT_TRUE(c.provenance.is_student());
  EXPECT_EQ(c.provenance.author, "s1");
  EXPECT_NO_THROW(ws.add_annotation(f.activity, "s2", TextSpan{0, 2}, note("x"), fem));
  const auto log = store.read_log(EntityKind::Activity, f.activity);
  EXPECT_EQ(log.back()["op"], "propose");
}

TEST_F(WorkspaceTest, ConcurrentProposalsAllLand) {
  const auto o = snapshot();
  ws.edit_snapshot(f.activity, 0, {edit::SetExtensible{id_of(o, "Criticism"), true}});
  std::vector<std::thread> threads;
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&, t] {
      Store own(dir.path());
      Workspace other(own);
      other.propose_concept(f.activity, id_of(o, "Criticism"), "P" + std::to_string(t), t % 2 ? "s1" : "s2");
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(get_concept(snapshot(), id_of(o, "Criticism")).children.size(), 9u);
}

TEST_F(WorkspaceTest, Grades) {
  ws.set_grade(f.activity, "s2", 6.5);
  ws.set_grade(f.activity, "s1", 9.5, 'A');
  ws.set_grade(f.activity, "s2", 7.0, 'B');
  const auto gs = ws.grades(f.activity);
  ASSERT_EQ(gs.size(), 2u);
  EXPECT_EQ(gs[0].student_id, "s1");
  EXPECT_EQ(gs[1].grade, 7.0);
  EXPECT_EQ(code_of([&] { ws.set_grade(f.activity, "s3", 5); }), ErrorCode::AuthorNotInGroup);
  EXPECT_EQ(code_of([&] { ws.set_grade(f.activity, "s1", 5, 'A'); }), ErrorCode::InvalidGrade);
}

TEST_F(WorkspaceTest, ArchiveRoundTripIntoFreshStore) {
  const auto o = snapshot();
  ws.edit_snapshot(f.activity, 0, {edit::SetExtensible{id_of(o, "Criticism"), true}});
  ws.propose_concept(f.activity, id_of(o, "Criticism"), "Feminist", "s2");
  ws.set_grade(f.activity, "s1", 8);
  const std::string archive = ws.export_archive(f.activity);
  EXPECT_EQ(archive.find("tok-"), std::string::npos);

  TempDir other_dir;
  Store other_store(other_dir.path());
  Workspace other(other_store);
  const auto imported = other.import_archive(archive);
  EXPECT_EQ(imported.id, f.activity);

  const auto before = ws.list_annotations(f.activity);
  const auto after = other.list_annotations(f.activity);
  EXPECT_EQ(Json(after).dump(), Json(before).dump());
  EXPECT_EQ(serialize_bracket(other.get_activity(f.activity).snapshot), serialize_bracket(snapshot()));
  EXPECT_EQ(other.export_archive(f.activity), archive);
  EXPECT_EQ(other.grades(f.activity).size(), 1u);
  EXPECT_EQ(other_store.read_log(EntityKind::Activity, f.activity), store.read_log(EntityKind::Activity, f.activity));

  EXPECT_EQ(code_of([&] { other.import_archive(archive); }), ErrorCode::AlreadyExists);
  EXPECT_EQ(code_of([&] { ws.import_archive(archive); }), ErrorCode::AlreadyExists);
}

TEST_F(WorkspaceTest, SharedEntitiesMayAlreadyExist) {
  const auto second = ws.create_activity("Second", f.document, f.group, f.ontology, "prof");
  ws.set_state(second.id, ActivityState::Open);
  const std::string first_archive = ws.export_archive(f.activity);
  const std::string second_archive = ws.export_archive(second.id);

  TempDir other_dir;
  Store other_store(other_dir.path());
  Workspace other(other_store);
  other.import_archive(first_archive);
  EXPECT_NO_THROW(other.import_archive(second_archive));

  Json tampered = Json::parse(ws.export_archive(second.id));
  tampered["activity"]["id"] = "third";
  tampered["activity"]["payload"]["id"] = "third";
  tampered["document"]["payload"]["title"] = "Changed";
  EXPECT_EQ(code_of([&] { other.import_archive(tampered.dump()); }), ErrorCode::AlreadyExists);
}

TEST_F(WorkspaceTest, CorruptArchivesAreRejected) {
  const std::string archive = ws.export_archive(f.activity);
  TempDir other_dir;
  Store other_store(other_dir.path());
  Workspace other(other_store);
  EXPECT_EQ(code_of([&] { other.import_archive(archive.substr(0, archive.size() / 2)); }), ErrorCode::CorruptArchive);
  EXPECT_EQ(code_of([&] { other.import_archive("[]"); }), ErrorCode::CorruptArchive);
  EXPECT_EQ(code_of([&] { other.import_archive(""); }), ErrorCode::CorruptArchive);

  Json j = Json::parse(archive);
  j["archive_version"] = 99;
  EXPECT_EQ(code_of([&] { other.import_archive(j.dump()); }), ErrorCode::CorruptArchive);

  j = Json::parse(archive);
  j["activity"]["payload"]["group_id"] = "elsewhere";
  EXPECT_EQ(code_of([&] { other.import_archive(j.dump()); }), ErrorCode::CorruptArchive);

  j = Json::parse(archive);
  j["annotations"][0]["payload"]["classification"] = Json::array();
  EXPECT_EQ(code_of([&] { other.import_archive(j.dump()); }), ErrorCode::CorruptArchive);

  j = Json::parse(archive);
  j["annotations"][0]["payload"]["activity_id"] = "other";
  EXPECT_EQ(code_of([&] { other.import_archive(j.dump()); }), ErrorCode::CorruptArchive);

  // Nothing was written by the failed imports.
  EXPECT_TRUE(other_store.list(EntityKind::Annotation).empty());
  EXPECT_TRUE(other_store.list(EntityKind::Activity).empty());
}
