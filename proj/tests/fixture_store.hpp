// A populated store shared by the workspace, service, CLI and acceptance
// tests: the literary-analysis ontology, two students and six annotations whose
// query outcomes are worked out by hand below.
#pragma once

#include <string>
#include <vector>

#include "ontonote/workspace.hpp"
#include "support.hpp"

namespace ontonote::testing {

struct SampleStore {
  std::string activity;
  std::string group;
  std::string document;
  std::string ontology;
  std::vector<std::string> annotations;  // a1..a6 in listing order
};

// Classifications (anchors ascending, so listing order is a1..a6):
//   a1 {Narration, Psychological}   a2 {Plot, Cultural}
//   a3 {Cultural, Narration}        a4 {Cultural, Use_Of_frames}
//   a5 {Bibliographical}            a6 {Narration, Plot}
//
// concepts=Cultural,Structure_type selects Cultural AND (Narration OR
// Use_Of_frames): a3, a4.
// "Narrative: +Narration -Plot; Criticism: +Criticism -Structure":
//   a1 via Narrative; a3 via Narrative; a5 via Criticism (no Structure
//   descendant); a2 fails both (Plot); a4 fails Narrative (no Narration) and
//   Criticism (Use_Of_frames is under Structure); a6 fails both.
inline const std::vector<std::string> kConceptListExpected = {"a3", "a4"};
inline const std::vector<std::string> kNamedQueryExpected = {"a1", "a3", "a5"};

inline SampleStore build_sample_store(Workspace& ws) {
  SampleStore f;
  ws.add_user({"prof", "Professor", Role::Instructor, "tok-prof"});
  ws.add_user({"s1", "Student One", Role::Student, "tok-s1"});
  ws.add_user({"s2", "Student Two", Role::Student, "tok-s2"});
  ws.add_user({"s3", "Student Three", Role::Student, "tok-s3"});
  f.group = ws.create_group("Literature 2", {"s1", "s2"}).id;

  Document d;
  d.title = "Les Liaisons dangereuses, letter 81";
  d.body = TextBody{"Que vos craintes me causent de pitié! Combien elles me prouvent ma supériorité sur vous."};
  f.document = ws.add_document(d).id;
  f.ontology = ws.create_ontology(kLiteraryAnalysis, "prof", Visibility::Public).id;
  f.activity = ws.create_activity("Critical reading", f.document, f.group, f.ontology, "prof").id;
  ws.set_state(f.activity, ActivityState::Open);

  const Ontology o = ws.get_activity(f.activity).snapshot;
  const std::vector<std::pair<const char*, ConceptSet>> rows = {
      {"s1", ids_of(o, {"Narration", "Psychological"})}, {"s2", ids_of(o, {"Plot", "Cultural"})},
      {"s1", ids_of(o, {"Cultural", "Narration"})},      {"s2", ids_of(o, {"Cultural", "Use_Of_frames"})},
      {"s1", ids_of(o, {"Bibliographical"})},            {"s2", ids_of(o, {"Narration", "Plot"})},
  };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Content c{{RichText{"<p>note a" + std::to_string(i + 1) + "</p>"}}};
    const Anchor anchor = TextSpan{i * 10, i * 10 + 5};
    f.annotations.push_back(ws.add_annotation(f.activity, rows[i].first, anchor, c, rows[i].second).id);
  }
  return f;
}

/// Maps annotation ids back to the a1..a6 labels.
inline std::vector<std::string> labels(const SampleStore& f, const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  for (const auto& id : ids) {
    for (std::size_t i = 0; i < f.annotations.size(); ++i) {
      if (f.annotations[i] == id) out.push_back("a" + std::to_string(i + 1));
    }
  }
  return out;
}

}  // namespace ontonote::testing
