// Acceptance runner: one PASS/FAIL line per primary criterion. Exits non-zero
// when any criterion fails.
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <latch>
#include <numeric>
#include <sstream>
#include <thread>

#include "fixture_store.hpp"
#include "http_harness.hpp"
#include "ontonote/cli.hpp"
#include "ontonote/service.hpp"
#include "ontonote/stats.hpp"
#include "support.hpp"

using namespace ontonote;
using namespace ontonote::stats;
using namespace ontonote::testing;
using Steady = std::chrono::steady_clock;

namespace {

// Pinned thresholds.
constexpr double kFixtureSeconds = 1.0;
constexpr double kRoundTripSeconds = 5.0;
constexpr double kFilterSeconds = 30.0;
constexpr int kRoundTripTrees = 1000;
constexpr int kFilterTrials = 10000;
constexpr double kExactVsNormalTolerance = 0.02;
constexpr int kExactVsNormalTrials = 1000;
constexpr int kUSumInputs = 1000;
constexpr double kCiTolerance = 0.01;
constexpr double kMeanTolerance = 0.0001;
constexpr double kCohortP = 0.001;
constexpr int kRaceTrials = 100;
constexpr int kKillRounds = 10;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

double seconds_since(Steady::time_point t0) { return std::chrono::duration<double>(Steady::now() - t0).count(); }

std::string fmt(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  return out + "'";
}

std::pair<int, std::string> run_binary(const std::vector<std::string>& args) {
  std::string cmd = shell_quote(ONTONOTE_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>/dev/null";
  std::string out;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) return {-1, out};
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = ::pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::vector<std::string> listed_labels(const SampleStore& f, const std::string& body) {
  std::vector<std::string> ids;
  const Json j = Json::parse(body);
  for (const auto& a : j["annotations"]) ids.push_back(a["id"]);
  return labels(f, ids);
}

// ---- criteria ----

Outcome fixture_metrics() {
  Outcome out;
  const auto t0 = Steady::now();
  const Ontology o = parse_bracket(kLiteraryAnalysis);
  const auto m = metrics(o);
  const std::string back = serialize_bracket(o);
  const double t = seconds_since(t0);
  out.require(m.concepts == 11 && m.intermediates == 4 && m.finals == 7,
              "counts " + std::to_string(m.concepts) + "/" + std::to_string(m.intermediates) + "/" +
                  std::to_string(m.finals));
  out.require(m.average_branching() && fmt(*m.average_branching()) == "2.5000", "average branching");
  out.require(back == kLiteraryAnalysis, "round trip differs: " + back);
  out.require(parse_bracket(back) == o, "reparsed tree differs");
  out.require(t < kFixtureSeconds, "took " + fmt(t) + "s");
  if (out.ok) out.detail = "11/4/7 avg=2.5000 in " + fmt(t, 3) + "s";
  return out;
}

Outcome random_round_trips() {
  Outcome out;
  Rng rng(1001);
  const auto t0 = Steady::now();
  int failures = 0;
  for (int i = 0; i < kRoundTripTrees; ++i) {
    TreeShape shape;
    shape.max_concepts = 60;
    shape.unicode_names = i % 2 == 0;
    const Ontology o = random_ontology(rng, shape);
    const std::string text = serialize_bracket(o);
    const Ontology back = parse_bracket(text);
    if (back.root != o.root || serialize_bracket(back) != text) ++failures;
  }
  const double t = seconds_since(t0);
  out.require(failures == 0, std::to_string(failures) + " trees changed");
  out.require(t < kRoundTripSeconds, "took " + fmt(t) + "s");
  if (out.ok) out.detail = std::to_string(kRoundTripTrees) + " trees in " + fmt(t, 3) + "s";
  return out;
}

Outcome filter_equivalence() {
  Outcome out;
  Rng rng(3003);
  const auto t0 = Steady::now();
  int mismatches = 0;
  for (int i = 0; i < kFilterTrials; ++i) {
    const Ontology o = random_ontology(rng);
    const auto anns = random_annotations(rng, o, 100);
    const Query q = random_query(rng, o, 4, 5);
    const auto fast = filter(anns, q, o);
    const auto slow = brute_force_filter(anns, q, o);
    std::vector<std::string> a, b, c;
    for (const auto& x : fast) a.push_back(x.id);
    for (const auto& x : slow) b.push_back(x.id);
    for (const auto& x : anns) {
      if (oracle_matches(q, x.classification, o)) c.push_back(x.id);
    }
    if (a != b || a != c) ++mismatches;
  }
  const double t = seconds_since(t0);
  out.require(mismatches == 0, std::to_string(mismatches) + " mismatching trials");
  out.require(t < kFilterSeconds, "took " + fmt(t) + "s");
  if (out.ok) out.detail = std::to_string(kFilterTrials) + " trials in " + fmt(t, 3) + "s";
  return out;
}

Outcome cli_and_http_listings() {
  Outcome out;
  TempDir dir;
  SampleStore f;
  {
    Store store(dir.path());
    Workspace ws(store);
    f = build_sample_store(ws);
  }
  Store store(dir.path());
  Workspace ws(store);
  RunningService server(ws);
  auto client = server.client("tok-prof");
  const std::vector<std::tuple<std::string, std::string, std::vector<std::string>>> cases = {
      {"concepts", "Cultural,Structure_type", kConceptListExpected},
      {"q", "Narrative: +Narration -Plot; Criticism: +Criticism -Structure", kNamedQueryExpected},
  };
  for (const auto& [kind, value, expected] : cases) {
    const auto http = client.Get("/activities/" + f.activity + "/annotations", {{kind, value}}, httplib::Headers{});
    if (!http || http->status != 200) {
      out.require(false, "HTTP request failed for " + value);
      continue;
    }
    const auto [code, body] = run_binary({"--root", dir.str(), "query", "run", "--activity", f.activity, "--" + kind, value});
    out.require(code == 0, "CLI exit " + std::to_string(code));
    out.require(listed_labels(f, http->body) == expected, "HTTP match set differs for " + value);
    out.require(listed_labels(f, body) == expected, "CLI match set differs for " + value);
    out.require(body == http->body, "CLI and HTTP bodies differ for " + value);
  }
  if (out.ok) out.detail = "{a3,a4} and {a1,a3,a5}, byte-identical";
  return out;
}

Outcome classification_rejections() {
  Outcome out;
  TempDir dir;
  Store store(dir.path());
  Workspace ws(store);
  const auto f = build_sample_store(ws);
  RunningService server(ws);
  auto client = server.client("tok-s1");
  auto post = [&](const std::vector<std::string>& concepts) {
    const Json body{{"anchor", {{"kind", "text"}, {"start", 0}, {"end", 3}}},
                    {"content", Json::array({{{"kind", "rich_text"}, {"html", "<p>n</p>"}}})},
                    {"concepts", concepts}};
    const auto r = client.Post("/activities/" + f.activity + "/annotations", body.dump(), "application/json");
    if (!r) return std::pair<int, std::string>{0, ""};
    return std::pair<int, std::string>{r->status, Json::parse(r->body).value("code", "")};
  };
  const auto empty = post({});
  out.require(empty.first == 422 && empty.second == "EMPTY_CLASSIFICATION",
              "empty: " + std::to_string(empty.first) + " " + empty.second);
  const auto nonfinal = post({"Criticism"});
  out.require(nonfinal.first == 422 && nonfinal.second == "NON_FINAL_CONCEPT",
              "non-final: " + std::to_string(nonfinal.first) + " " + nonfinal.second);
  out.require(ws.list_annotations(f.activity).size() == 6, "a rejected annotation was stored");
  if (out.ok) out.detail = "422 EMPTY_CLASSIFICATION, 422 NON_FINAL_CONCEPT";
  return out;
}

Outcome statistics_oracles() {
  Outcome out;
  // Every tie-free arrangement for n1, n2 <= 5: the ranks 1..n split by mask.
  std::size_t mw_cases = 0;
  for (std::size_t n1 = 1; n1 <= 5; ++n1) {
    for (std::size_t n2 = 1; n2 <= 5; ++n2) {
      const std::size_t n = n1 + n2;
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != n1) continue;
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? a : b).push_back(static_cast<double>(i + 1));
        const auto r = mann_whitney_u(a, b, MethodChoice::Exact);
        out.require(r.p == mw_enumeration_p(a, b), "Mann-Whitney exact p differs at " + std::to_string(n1) + "x" +
                                                       std::to_string(n2));
        ++mw_cases;
      }
    }
  }
  // Every sign pattern over tie-free magnitudes for m <= 12, plus tied data.
  std::size_t w_cases = 0;
  for (std::size_t m = 1; m <= 12; ++m) {
    for (std::uint32_t signs = 0; signs < (1u << m); ++signs) {
      std::vector<double> d(m);
      for (std::size_t i = 0; i < m; ++i) d[i] = ((signs >> i) & 1u) ? -double(i + 1) : double(i + 1);
      out.require(wilcoxon_signed_rank(d, MethodChoice::Exact).p == wilcoxon_enumeration_p(d),
                  "Wilcoxon exact p differs at m=" + std::to_string(m));
      ++w_cases;
    }
  }
  Rng rng(6006);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> d(uniform(rng, 1, 12));
    for (auto& x : d) x = (coin(rng) ? 1.0 : -1.0) * static_cast<double>(uniform(rng, 1, 4));
    out.require(wilcoxon_signed_rank(d, MethodChoice::Exact).p == wilcoxon_enumeration_p(d),
                "Wilcoxon exact p differs on tied data");
    ++w_cases;
  }
  double worst = 0;
  for (int trial = 0; trial < kExactVsNormalTrials; ++trial) {
    const auto a = distinct_values(rng, 16);
    const std::vector<double> x(a.begin(), a.begin() + 8), y(a.begin() + 8, a.end());
    const double gap = std::fabs(mann_whitney_u(x, y, MethodChoice::Exact).p -
                                 mann_whitney_u(x, y, MethodChoice::Normal).p);
    worst = std::max(worst, gap);
  }
  out.require(worst <= kExactVsNormalTolerance, "exact vs normal gap " + fmt(worst));
  int bad_sums = 0;
  for (int trial = 0; trial < kUSumInputs; ++trial) {
    std::vector<double> a(uniform(rng, 1, 30)), b(uniform(rng, 1, 30));
    for (auto& v : a) v = static_cast<double>(uniform(rng, 0, 20));
    for (auto& v : b) v = static_cast<double>(uniform(rng, 0, 20));
    const auto r = mann_whitney_u(a, b);
    if (r.statistic("U1") + r.statistic("U2") != static_cast<double>(a.size() * b.size())) ++bad_sums;
  }
  out.require(bad_sums == 0, std::to_string(bad_sums) + " inputs with U1+U2 != n1*n2");
  if (out.ok) {
    out.detail = std::to_string(mw_cases) + " MW cases, " + std::to_string(w_cases) +
                 " Wilcoxon cases, max exact-normal gap " + fmt(worst);
  }
  return out;
}

// Random non-negative integers of length n summing to total.
std::vector<double> integers_summing_to(Rng& rng, std::size_t n, std::size_t total) {
  std::vector<std::size_t> cuts{0, total};
  for (std::size_t i = 0; i + 1 < n; ++i) cuts.push_back(uniform(rng, 0, total));
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> out;
  for (std::size_t i = 1; i < cuts.size(); ++i) out.push_back(static_cast<double>(cuts[i] - cuts[i - 1]));
  return out;
}

Outcome descriptive_statistics() {
  Outcome out;
  const std::vector<double> small = {10, 12, 14};
  const auto r = mean_ci(small);
  out.require(r.interval && std::fabs(r.interval->first - 7.03) <= kCiTolerance &&
                  std::fabs(r.interval->second - 16.97) <= kCiTolerance,
              "interval " + (r.interval ? fmt(r.interval->first) + "," + fmt(r.interval->second) : "absent"));
  Rng rng(7007);
  for (int trial = 0; trial < 500; ++trial) {
    const auto first = integers_summing_to(rng, 26, 468);
    out.require(fmt(mean_ci(first).mean) == "18.0000", "26-sample mean " + fmt(mean_ci(first).mean));
    const auto second = integers_summing_to(rng, 27, 490);
    out.require(std::fabs(mean_ci(second).mean - 18.1481) <= kMeanTolerance,
                "27-sample mean " + fmt(mean_ci(second).mean));
  }
  if (out.ok) out.detail = "[" + fmt(r.interval->first, 2) + ", " + fmt(r.interval->second, 2) + "], 18.0000, 18.1481";
  return out;
}

Outcome improving_cohort() {
  Outcome out;
  Rng rng(8008);
  std::map<std::string, double> before, after;
  for (int s = 0; s < 25; ++s) {
    const std::string id = "s" + std::to_string(100 + s);
    const double b = static_cast<double>(uniform(rng, 0, 20));
    before[id] = b;
    after[id] = b + 2.0 + static_cast<double>(uniform(rng, 0, 8));
  }
  const auto diffs = paired_differences(before, after);
  const auto r = wilcoxon_signed_rank(diffs, MethodChoice::Exact);
  const double mean_diff = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
  out.require(diffs.size() == 25, "paired " + std::to_string(diffs.size()));
  out.require(r.method == PMethod::Exact, "p not exact");
  out.require(r.p < kCohortP, "p = " + std::to_string(r.p));
  out.require(mean_diff > 0, "mean difference " + fmt(mean_diff));
  if (out.ok) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", r.p);
    out.detail = std::string("exact p=") + buf + ", mean difference " + fmt(mean_diff, 2);
  }
  return out;
}

Outcome concurrency_and_recovery() {
  Outcome out;
  TempDir dir;
  std::string oid;
  {
    Store store(dir.path());
    Workspace ws(store);
    ws.add_user({"prof", "Professor", Role::Instructor, "tok-prof"});
    oid = ws.create_ontology(kLiteraryAnalysis, "prof", Visibility::Public).id;
  }
  const ConceptId plot = [&] {
    Store store(dir.path());
    return id_of(Workspace(store).get_ontology(oid), "Plot");
  }();
  int wins_total = 0, conflicts_total = 0, bad_trials = 0;
  for (int trial = 0; trial < kRaceTrials; ++trial) {
    Store first(dir.path()), second(dir.path());
    Workspace wa(first), wb(second);
    const Ontology cur = wa.get_ontology(oid);
    std::latch start(2);
    std::atomic<int> wins{0}, conflicts{0}, other{0};
    auto writer = [&](Workspace& ws, const std::string& name) {
      start.arrive_and_wait();
      try {
        ws.edit_ontology(oid, cur.revision, {edit::Rename{plot, name}});
        ++wins;
      } catch (const Error& e) {
        (e.code() == ErrorCode::Conflict ? conflicts : other)++;
      }
    };
    std::thread a(writer, std::ref(wa), "PlotA" + std::to_string(trial));
    std::thread b(writer, std::ref(wb), "PlotB" + std::to_string(trial));
    a.join();
    b.join();
    wins_total += wins;
    conflicts_total += conflicts;
    if (wins != 1 || conflicts != 1 || other != 0) ++bad_trials;
    if (wa.get_ontology(oid).revision != cur.revision + 1) ++bad_trials;
  }
  out.require(bad_trials == 0, std::to_string(bad_trials) + " race trials without exactly one winner");

  // A child keeps editing the ontology and reports each acknowledged
  // revision over a pipe until it is killed.
  std::uint64_t acknowledged = 0;
  {
    Store store(dir.path());
    acknowledged = Workspace(store).get_ontology(oid).revision;
  }
  const ConceptId setting = [&] {
    Store store(dir.path());
    return id_of(Workspace(store).get_ontology(oid), "Setting");
  }();
  Rng rng(9009);
  for (int round = 0; round < kKillRounds && out.ok; ++round) {
    int fds[2];
    if (::pipe(fds) != 0) {
      out.require(false, "pipe failed");
      break;
    }
    const pid_t child = ::fork();
    if (child == 0) {
      ::close(fds[0]);
      Store store(dir.path());
      Workspace ws(store);
      for (std::uint64_t i = 0;; ++i) {
        const Ontology cur = ws.get_ontology(oid);
        const std::uint64_t rev =
            ws.edit_ontology(oid, cur.revision, {edit::Rename{setting, "Setting" + std::to_string(i % 2)}}).revision;
        if (::write(fds[1], &rev, sizeof rev) != sizeof rev) ::_exit(1);
      }
    }
    ::close(fds[1]);
    ::usleep(static_cast<useconds_t>(uniform(rng, 5000, 40000)));
    ::kill(child, SIGKILL);
    ::waitpid(child, nullptr, 0);
    std::uint64_t rev = 0;
    while (::read(fds[0], &rev, sizeof rev) == sizeof rev) acknowledged = std::max(acknowledged, rev);
    ::close(fds[0]);

    Store reopened(dir.path());
    const auto report = reopened.recover();
    out.require(report.unreadable.empty(), "unreadable envelopes after kill");
    const Ontology o = Workspace(reopened).get_ontology(oid);
    // The write after the last acknowledgement may have landed before the kill.
    out.require(o.revision == acknowledged || o.revision == acknowledged + 1,
                "revision " + std::to_string(o.revision) + " vs acknowledged " + std::to_string(acknowledged));
    try {
      validate(o);
    } catch (const Error& e) {
      out.require(false, std::string("invalid ontology after kill: ") + e.what());
    }
    acknowledged = o.revision;
  }
  if (out.ok) {
    out.detail = std::to_string(wins_total) + " wins, " + std::to_string(conflicts_total) + " conflicts; " +
                 std::to_string(kKillRounds) + " kills, final revision " + std::to_string(acknowledged);
  }
  return out;
}

Outcome archive_round_trip() {
  Outcome out;
  TempDir dir, fresh_dir;
  Store store(dir.path());
  Workspace ws(store);
  const auto f = build_sample_store(ws);
  const Ontology o = ws.get_activity(f.activity).snapshot;
  ws.edit_snapshot(f.activity, 0, {edit::SetExtensible{id_of(o, "Criticism"), true}});
  ws.propose_concept(f.activity, id_of(o, "Criticism"), "Feminist", "s2");
  ws.set_grade(f.activity, "s1", 8);
  const std::string archive = ws.export_archive(f.activity);

  Store fresh_store(fresh_dir.path());
  Workspace fresh(fresh_store);
  fresh.import_archive(archive);
  const std::vector<AnnotationQuery> queries = {
      {}, {std::string("+Criticism"), {}, {}}, {{}, std::string("Cultural,Structure_type"), {}}, {{}, {}, std::string("s1")}};
  for (const auto& q : queries) {
    out.require(render_json(annotation_query_response(ws, f.activity, q)) ==
                    render_json(annotation_query_response(fresh, f.activity, q)),
                "listing differs");
  }
  out.require(serialize_bracket(fresh.get_activity(f.activity).snapshot) ==
                  serialize_bracket(ws.get_activity(f.activity).snapshot),
              "ontology serialization differs");
  out.require(fresh.export_archive(f.activity) == archive, "re-export differs");
  if (out.ok) out.detail = std::to_string(archive.size()) + "-byte archive reproduced";
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"fixture-ontology-metrics", fixture_metrics},
      {"bracket-round-trip", random_round_trips},
      {"filter-equals-brute-force", filter_equivalence},
      {"cli-http-listings", cli_and_http_listings},
      {"classification-rejections", classification_rejections},
      {"statistics-oracles", statistics_oracles},
      {"descriptive-statistics", descriptive_statistics},
      {"improving-cohort-wilcoxon", improving_cohort},
      {"concurrency-and-recovery", concurrency_and_recovery},
      {"archive-round-trip", archive_round_trip},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("threw: ") + e.what();
    }
    if (!o.ok) ++failed;
    std::cout << (o.ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
