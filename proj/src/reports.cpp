#include "ontonote/reports.hpp"

#include <cstdio>
#include <sstream>

namespace ontonote {

CoverageReport coverage(const Activity& activity, const Group& group,
                        const std::vector<Annotation>& annotations) {
  const ConceptSet all_finals = finals(activity.snapshot);
  CoverageReport report;
  for (const auto& id : all_finals) report.concept_counts[id] = 0;

  std::map<std::string, StudentCoverage> by_student;
  for (const auto& member : group.members) by_student[member].student = member;
  for (const auto& a : annotations) {
    auto& s = by_student[a.author];
    s.student = a.author;
    ++s.annotations;
    for (const auto& id : a.classification) {
      s.used.insert(id);
      ++report.concept_counts[id];
    }
  }
  for (auto& [_, s] : by_student) {
    for (const auto& id : all_finals) {
      if (s.used.count(id) == 0) s.unused.insert(id);
    }
    report.students.push_back(std::move(s));
  }
  return report;
}

ProposalReport proposal_report(const Activity& activity, const std::vector<Annotation>& annotations) {
  ProposalReport report;
  report.total_annotations = annotations.size();
  std::map<ConceptId, std::size_t> index;
  for (const Concept* c : all_concepts(activity.snapshot)) {
    if (!c->provenance.is_student()) continue;
    const Concept* parent = parent_of(activity.snapshot, c->id);
    index[c->id] = report.concepts.size();
    report.concepts.push_back(ProposedConcept{c->id, c->name, c->provenance.author,
                                              parent != nullptr ? parent->id : ConceptId{}, 0});
  }
  for (const auto& a : annotations) {
    bool uses = false;
    for (const auto& id : a.classification) {
      const auto it = index.find(id);
      if (it == index.end()) continue;
      ++report.concepts[it->second].usage;
      uses = true;
    }
    if (uses) ++report.annotations_using_proposals;
  }
  return report;
}

std::map<std::string, double> per_student_counts(const Group& group,
                                                 const std::vector<Annotation>& annotations) {
  std::map<std::string, double> counts;
  for (const auto& member : group.members) counts[member] = 0;
  for (const auto& a : annotations) counts[a.author] += 1;
  return counts;
}

Json to_json(const stats::Histogram& h) {
  Json bins = Json::array();
  for (const auto& b : h.bins) {
    bins.push_back(Json{{"lo", round4(b.lo)}, {"hi", round4(b.hi)}, {"count", b.count},
                        {"percentage", round4(b.percentage)}});
  }
  return Json{{"width", round4(h.width)}, {"n", h.n}, {"bins", bins}};
}

Json to_json(const stats::MeanCI& m) {
  Json j{{"n", m.n}, {"mean", round4(m.mean)}, {"level", round4(m.level)}};
  j["sd"] = m.sd ? Json(round4(*m.sd)) : Json(nullptr);
  j["interval"] = m.interval ? Json::array({round4(m.interval->first), round4(m.interval->second)}) : Json(nullptr);
  return j;
}

Json to_json(const stats::TestResult& t) {
  Json statistics = Json::object();
  for (const auto& [k, v] : t.statistics) statistics[k] = round4(v);
  Json sizes = Json::object();
  for (const auto& [k, v] : t.sizes) sizes[k] = v;
  Json j{{"test", t.test},
         {"statistics", statistics},
         {"sizes", sizes},
         {"p", round4(t.p)},
         {"method", t.method == stats::PMethod::Exact ? "exact" : "normal-approximation"},
         {"ties", t.ties}};
  j["z"] = t.z ? Json(round4(*t.z)) : Json(nullptr);
  if (t.test == "wilcoxon-signed-rank") j["zeros_dropped"] = t.zeros_dropped;
  return j;
}

Json to_json(const CoverageReport& c, const Ontology& o) {
  auto names = [&](const ConceptSet& ids) {
    Json arr = Json::array();
    for (const auto& id : ids) arr.push_back(get_concept(o, id).name);
    return arr;
  };
  Json students = Json::array();
  for (const auto& s : c.students) {
    students.push_back(Json{{"student", s.student},
                            {"annotations", s.annotations},
                            {"used", s.used},
                            {"unused", s.unused},
                            {"used_names", names(s.used)},
                            {"unused_names", names(s.unused)}});
  }
  Json concepts = Json::array();
  for (const auto& [id, count] : c.concept_counts) {
    const Concept* concept_node = find_concept(o, id);
    concepts.push_back(Json{{"concept", id},
                            {"name", concept_node != nullptr ? concept_node->name : std::string()},
                            {"annotations", count}});
  }
  return Json{{"students", students}, {"concepts", concepts}};
}

Json to_json(const ProposalReport& p) {
  Json concepts = Json::array();
  for (const auto& c : p.concepts) {
    concepts.push_back(Json{{"concept", c.id},
                            {"name", c.name},
                            {"proposer", c.proposer},
                            {"parent", c.parent},
                            {"usage", c.usage}});
  }
  return Json{{"concepts", concepts},
              {"annotations_using_proposals", p.annotations_using_proposals},
              {"total_annotations", p.total_annotations}};
}

Json activity_report(const Activity& activity, const Group& group,
                     const std::vector<Annotation>& annotations, const ReportOptions& options) {
  Json report{{"activity", activity.id}, {"total_annotations", annotations.size()}};
  report["coverage"] = to_json(coverage(activity, group, annotations), activity.snapshot);
  report["proposals"] = to_json(proposal_report(activity, annotations));

  const auto counts = per_student_counts(group, annotations);
  Json per_student = Json::object();
  std::vector<double> samples;
  for (const auto& [student, n] : counts) {
    per_student[student] = n;
    samples.push_back(n);
  }
  report["per_student_counts"] = per_student;
  if (samples.empty()) {
    report["histogram"] = nullptr;
    report["mean_ci"] = nullptr;
  } else {
    report["histogram"] = to_json(stats::histogram(samples, options.bin_width));
    report["mean_ci"] = to_json(stats::mean_ci(samples, options.level));
  }
  return report;
}

Json compare_report(const std::map<std::string, double>& before,
                    const std::map<std::string, double>& after, double diff_bin_width, double level) {
  std::vector<double> a;
  std::vector<double> b;
  for (const auto& [_, v] : before) a.push_back(v);
  for (const auto& [_, v] : after) b.push_back(v);
  const auto diffs = stats::paired_differences(before, after);

  Json report;
  report["mann_whitney"] = to_json(stats::mann_whitney_u(a, b));
  report["wilcoxon"] = to_json(stats::wilcoxon_signed_rank(diffs));
  report["paired_students"] = diffs.size();
  report["differences"] = Json::array();
  for (const double d : diffs) report["differences"].push_back(round4(d));
  report["difference_histogram"] = to_json(stats::histogram(diffs, diff_bin_width));
  report["difference_mean_ci"] = to_json(stats::mean_ci(diffs, level));
  report["before_mean_ci"] = to_json(stats::mean_ci(a, level));
  report["after_mean_ci"] = to_json(stats::mean_ci(b, level));
  return report;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

std::string num(const Json& j) {
  if (j.is_null()) return "";
  if (j.is_number_integer() || j.is_number_unsigned()) return std::to_string(j.get<long long>());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", j.get<double>());
  return buf;
}

void histogram_csv(std::ostringstream& out, const Json& h) {
  out << "bin_lo,bin_hi,count,percentage\n";
  if (h.is_null()) return;
  for (const auto& b : h.at("bins")) {
    out << num(b.at("lo")) << ',' << num(b.at("hi")) << ',' << num(b.at("count")) << ','
        << num(b.at("percentage")) << '\n';
  }
}

}  // namespace

std::string activity_report_csv(const Json& report) {
  std::ostringstream out;
  out << "student,annotations,used,unused\n";
  for (const auto& s : report.at("coverage").at("students")) {
    out << csv_field(s.at("student").get<std::string>()) << ',' << num(s.at("annotations")) << ','
        << s.at("used").size() << ',' << s.at("unused").size() << '\n';
  }
  out << "\nconcept,name,annotations\n";
  for (const auto& c : report.at("coverage").at("concepts")) {
    out << csv_field(c.at("concept").get<std::string>()) << ',' << csv_field(c.at("name").get<std::string>())
        << ',' << num(c.at("annotations")) << '\n';
  }
  out << '\n';
  histogram_csv(out, report.at("histogram"));
  return out.str();
}

std::string compare_report_csv(const Json& report) {
  std::ostringstream out;
  out << "test,statistic,value\n";
  for (const char* key : {"mann_whitney", "wilcoxon"}) {
    const auto& t = report.at(key);
    for (const auto& [name, v] : t.at("statistics").items()) {
      out << t.at("test").get<std::string>() << ',' << csv_field(name) << ',' << num(v) << '\n';
    }
    out << t.at("test").get<std::string>() << ",p," << num(t.at("p")) << '\n';
  }
  out << '\n';
  histogram_csv(out, report.at("difference_histogram"));
  return out.str();
}

}  // namespace ontonote
