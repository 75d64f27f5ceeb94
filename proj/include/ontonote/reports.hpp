#pragma once

#include <map>
#include <string>
#include <vector>

#include "ontonote/annotation.hpp"
#include "ontonote/json_io.hpp"
#include "ontonote/stats.hpp"

namespace ontonote {

struct StudentCoverage {
  std::string student;
  std::size_t annotations = 0;
  ConceptSet used;
  ConceptSet unused;
};

struct CoverageReport {
  std::vector<StudentCoverage> students;           // ordered by student id
  std::map<ConceptId, std::size_t> concept_counts;  // every final concept, zeros included
};

/// Coverage of the snapshot's final concepts per student. Students are the
/// group members plus any other annotation authors.
CoverageReport coverage(const Activity& activity, const Group& group,
                        const std::vector<Annotation>& annotations);

struct ProposedConcept {
  ConceptId id;
  std::string name;
  std::string proposer;
  ConceptId parent;
  std::size_t usage = 0;
};

struct ProposalReport {
  std::vector<ProposedConcept> concepts;
  std::size_t annotations_using_proposals = 0;
  std::size_t total_annotations = 0;
};

ProposalReport proposal_report(const Activity& activity, const std::vector<Annotation>& annotations);

/// Annotation count per group member (zeros included).
std::map<std::string, double> per_student_counts(const Group& group,
                                                 const std::vector<Annotation>& annotations);

Json to_json(const stats::Histogram& h);
Json to_json(const stats::MeanCI& m);
Json to_json(const stats::TestResult& t);
Json to_json(const CoverageReport& c, const Ontology& o);
Json to_json(const ProposalReport& p);

struct ReportOptions {
  double bin_width = 10.0;
  double level = 0.95;
};

/// Coverage, proposals, count histogram and mean CI for one activity.
Json activity_report(const Activity& activity, const Group& group,
                     const std::vector<Annotation>& annotations, const ReportOptions& options = {});
std::string activity_report_csv(const Json& report);

/// Compares two per-student samples: Mann-Whitney on the full samples,
/// Wilcoxon and a histogram on the paired differences (after - before).
Json compare_report(const std::map<std::string, double>& before,
                    const std::map<std::string, double>& after, double diff_bin_width = 1.0,
                    double level = 0.95);
std::string compare_report_csv(const Json& report);

}  // namespace ontonote
