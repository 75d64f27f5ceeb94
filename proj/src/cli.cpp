#include "ontonote/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ontonote/query.hpp"
#include "ontonote/reports.hpp"
#include "ontonote/service.hpp"
#include "ontonote/workspace.hpp"

namespace ontonote {

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << data) || !out.flush()) throw Error(ErrorCode::IoError, "cannot write " + path);
}

// Per-student values from a JSON object or "student,value" CSV lines; a
// non-numeric first line is taken as a header.
std::map<std::string, double> read_sample(const std::string& path) {
  const std::string text = read_text(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    return decode<std::map<std::string, double>>(parse_json(text, "sample"), "sample");
  }
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::ParseError, path + ": expected 'student,value'", {line_no, 1, 0});
    }
    const std::string value = line.substr(comma + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0') {
      if (line_no == 1) continue;
      throw Error(ErrorCode::ParseError, path + ": '" + value + "' is not a number", {line_no, comma + 2, 0});
    }
    out[line.substr(0, comma)] = v;
  }
  return out;
}

std::string format_metrics(const OntologyMetrics& m) {
  std::ostringstream os;
  os << "concepts=" << m.concepts << " intermediates=" << m.intermediates << " finals=" << m.finals
     << " avg_branching=";
  if (const auto b = m.average_branching()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *b);
    os << buf;
  } else {
    os << "n/a";
  }
  return os.str();
}

std::pair<std::string, int> split_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--addr", "expected host:port");
  try {
    return {addr.substr(0, colon), std::stoi(addr.substr(colon + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--addr", "port must be a number");
  }
}

std::pair<std::size_t, std::size_t> split_span(const std::string& span) {
  const auto colon = span.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(span);
    return {std::stoull(span.substr(0, colon)), std::stoull(span.substr(colon + 1))};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--span", "expected START:END codepoint offsets");
  }
}

std::atomic<HttpService*> g_serving{nullptr};

extern "C" void stop_serving(int) {
  if (HttpService* s = g_serving.load()) s->stop();
}

struct Options {
  bool json = false;
  std::string root;
  std::string file;
  std::string output;
  std::string id;
  std::string owner;
  std::string visibility = "private";
  std::string title;
  std::string document, group, ontology;
  std::string state;
  std::string q, concepts, author;
  std::string before, after;
  double bin_width = 0;
  double level = 0.95;
  std::string format = "json";
  std::string addr = "127.0.0.1:8080";
  std::string name, role, token, remote_uri;
  std::vector<std::string> members;
  std::string span, text;
  std::string student;
  double grade = 0;
  std::string letter;
};

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args) {
    CLI::App app{"Ontology-guided annotation activities: authoring, import/export, queries and reports", "ontonote"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    app.add_flag("--json", o_.json, "Machine-readable JSON output");
    const char* env_root = std::getenv("ONTONOTE_ROOT");
    if (env_root) o_.root = env_root;
    app.add_option("--root", o_.root, "Store directory (default: $ONTONOTE_ROOT)");

    auto* ontology = app.add_subcommand("ontology", "Ontology authoring")->require_subcommand(1);
    auto* ont_check = ontology->add_subcommand("check", "Parse and validate a bracket file");
    auto* ont_fmt = ontology->add_subcommand("fmt", "Print the canonical bracket serialization");
    auto* ont_metrics = ontology->add_subcommand("metrics", "Concept counts and average branching");
    auto* ont_import = ontology->add_subcommand("import", "Store a bracket file as a new ontology");
    auto* ont_show = ontology->add_subcommand("show", "Print a stored ontology");
    for (auto* sub : {ont_check, ont_fmt, ont_metrics, ont_import}) {
      sub->add_option("file", o_.file, "Bracket file")->required();
    }
    ont_import->add_option("--owner", o_.owner, "Owning instructor id")->required();
    ont_import->add_option("--visibility", o_.visibility)->check(CLI::IsMember({"public", "private"}));
    ont_show->add_option("id", o_.id)->required();

    auto* user = app.add_subcommand("user", "User administration")->require_subcommand(1);
    auto* user_add = user->add_subcommand("add", "Register a user");
    user_add->add_option("--id", o_.id)->required();
    user_add->add_option("--name", o_.name);
    user_add->add_option("--role", o_.role)->required()->check(CLI::IsMember({"instructor", "student"}));
    user_add->add_option("--token", o_.token, "Static bearer token");

    auto* group = app.add_subcommand("group", "Student groups")->require_subcommand(1);
    auto* group_create = group->add_subcommand("create", "Create a group of students");
    group_create->add_option("--name", o_.name)->required();
    group_create->add_option("--member", o_.members, "Student id (repeatable)");

    auto* document = app.add_subcommand("document", "Documents")->require_subcommand(1);
    auto* doc_import = document->add_subcommand("import", "Import a UTF-8 text file or a JSON document manifest");
    doc_import->add_option("file", o_.file)->required();
    doc_import->add_option("--title", o_.title);
    doc_import->add_option("--remote-uri", o_.remote_uri);

    auto* activity = app.add_subcommand("activity", "Annotation activities")->require_subcommand(1);
    auto* act_create = activity->add_subcommand("create", "Create a draft activity");
    act_create->add_option("--title", o_.title);
    act_create->add_option("--document", o_.document)->required();
    act_create->add_option("--group", o_.group)->required();
    act_create->add_option("--ontology", o_.ontology)->required();
    act_create->add_option("--owner", o_.owner)->required();
    auto* act_state = activity->add_subcommand("state", "Open or close an activity");
    act_state->add_option("id", o_.id)->required();
    act_state->add_option("state", o_.state)->required()->check(CLI::IsMember({"open", "closed"}));
    auto* act_show = activity->add_subcommand("show", "Print an activity");
    act_show->add_option("id", o_.id)->required();
    auto* act_export = activity->add_subcommand("export", "Write an activity archive");
    act_export->add_option("id", o_.id)->required();
    act_export->add_option("-o,--output", o_.output, "Archive path (default: stdout)");
    auto* act_import = activity->add_subcommand("import", "Load an activity archive");
    act_import->add_option("file", o_.file)->required();

    auto* annotation = app.add_subcommand("annotation", "Annotations")->require_subcommand(1);
    auto* ann_add = annotation->add_subcommand("add", "Add a text-span annotation");
    ann_add->add_option("--activity", o_.id)->required();
    ann_add->add_option("--author", o_.author)->required();
    ann_add->add_option("--span", o_.span, "START:END codepoint offsets")->required();
    ann_add->add_option("--text", o_.text, "Annotation content (HTML subset)")->required();
    ann_add->add_option("--concepts", o_.concepts, "Comma-separated final concept paths")->required();

    auto* grade = app.add_subcommand("grade", "Grades")->require_subcommand(1);
    auto* grade_set = grade->add_subcommand("set", "Record a student's grade");
    grade_set->add_option("--activity", o_.id)->required();
    grade_set->add_option("--student", o_.student)->required();
    grade_set->add_option("--grade", o_.grade)->required()->check(CLI::Range(0.0, 10.0));
    grade_set->add_option("--letter", o_.letter)->check(CLI::IsMember({"A", "B", "C", "D", "E"}));

    auto* query = app.add_subcommand("query", "Annotation retrieval")->require_subcommand(1);
    auto* query_run = query->add_subcommand("run", "Filter an activity's annotations");
    query_run->add_option("--activity", o_.id)->required();
    auto* q_opt = query_run->add_option("--q", o_.q, "Query text: [name:] +concept -concept ; ...");
    auto* c_opt = query_run->add_option("--concepts", o_.concepts, "Basic filter: comma-separated paths");
    q_opt->excludes(c_opt);
    query_run->add_option("--author", o_.author);

    auto* report = app.add_subcommand("report", "Assessment reports")->require_subcommand(1);
    auto* rep_activity = report->add_subcommand("activity", "Coverage, proposals and per-student statistics");
    rep_activity->add_option("id", o_.id)->required();
    rep_activity->add_option("--bin-width", o_.bin_width, "Histogram bin width")->default_val(10.0);
    auto* rep_compare = report->add_subcommand("compare", "Compare two per-student samples");
    rep_compare->add_option("--before", o_.before, "JSON object or student,value CSV")->required();
    rep_compare->add_option("--after", o_.after, "JSON object or student,value CSV")->required();
    rep_compare->add_option("--bin-width", o_.bin_width, "Difference histogram bin width")->default_val(1.0);
    for (auto* sub : {rep_activity, rep_compare}) {
      sub->add_option("--level", o_.level, "Confidence level")->check(CLI::Range(0.5, 0.9999));
      sub->add_option("--format", o_.format)->check(CLI::IsMember({"json", "csv"}));
    }

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--addr", o_.addr, "host:port");

    try {
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(std::move(reversed));
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out_, err_);
      return code == 0 ? kExitOk : kExitUsage;
    }

    try {
      if (*ont_check) return ontology_check();
      if (*ont_fmt) return print(serialize_bracket(load_bracket()) + "\n");
      if (*ont_metrics) return ontology_metrics();
      if (*ont_import) return ontology_import();
      if (*ont_show) return emit(ontology_view(workspace().get_ontology(o_.id)));
      if (*user_add) return user_add_cmd();
      if (*group_create) return emit(Json(workspace().create_group(o_.name, {o_.members.begin(), o_.members.end()})));
      if (*doc_import) return document_import();
      if (*act_create) {
        return emit(activity_view(
            workspace().create_activity(o_.title, o_.document, o_.group, o_.ontology, o_.owner)));
      }
      if (*act_state) {
        return emit(activity_view(workspace().set_state(o_.id, activity_state_from_string(o_.state))));
      }
      if (*act_show) return emit(activity_view(workspace().get_activity(o_.id)));
      if (*act_export) return activity_export();
      if (*act_import) return emit(activity_view(workspace().import_archive(read_text(o_.file))));
      if (*ann_add) return annotation_add();
      if (*grade_set) return grade_set_cmd();
      if (*query_run) return query_run_cmd();
      if (*rep_activity) return report_activity();
      if (*rep_compare) return report_compare();
      if (*serve) return serve_cmd();
    } catch (const CLI::ValidationError& e) {
      err_ << "error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const Error& e) {
      return fail(e);
    } catch (const Json::exception& e) {
      return fail(Error(ErrorCode::Validation, e.what()));
    } catch (const std::filesystem::filesystem_error& e) {
      return fail(Error(ErrorCode::IoError, e.what()));
    }
    return kExitUsage;
  }

 private:
  int fail(const Error& e) {
    if (o_.json) {
      err_ << error_body(e).dump() << "\n";
    } else {
      err_ << "error: ";
      // Positioned messages already name the line and column.
      if (e.position() && !o_.file.empty()) err_ << o_.file << ": ";
      err_ << e.what() << " [" << to_string(e.code()) << "]\n";
    }
    return e.code() == ErrorCode::IoError ? kExitIo : kExitValidation;
  }

  int print(const std::string& s) {
    out_ << s;
    return kExitOk;
  }

  int emit(const Json& j) { return print(render_json(j)); }

  Workspace& workspace() {
    if (!ws_) {
      if (o_.root.empty()) throw CLI::ValidationError("--root", "no store root: pass --root or set ONTONOTE_ROOT");
      store_ = std::make_unique<Store>(o_.root);
      ws_ = std::make_unique<Workspace>(*store_);
    }
    return *ws_;
  }

  Ontology load_bracket() { return parse_bracket(read_text(o_.file)); }

  int ontology_check() {
    const Ontology o = load_bracket();
    validate(o);
    if (o_.json) return emit(ontology_view(o));
    return print("ok " + format_metrics(metrics(o)) + "\n");
  }

  int ontology_metrics() {
    const Ontology o = load_bracket();
    if (o_.json) return emit(ontology_view(o)["metrics"]);
    return print(format_metrics(metrics(o)) + "\n");
  }

  int ontology_import() {
    const Ontology o =
        workspace().create_ontology(read_text(o_.file), o_.owner, visibility_from_string(o_.visibility));
    if (o_.json) return emit(ontology_view(o));
    return print(o.id + "\n");
  }

  int user_add_cmd() {
    User u{o_.id, o_.name.empty() ? o_.id : o_.name, role_from_string(o_.role), o_.token};
    workspace().add_user(u);
    if (o_.json) {
      Json j = u;
      j.erase("token");
      return emit(j);
    }
    return print(u.id + "\n");
  }

  int document_import() {
    const std::string data = read_text(o_.file);
    Document d;
    if (o_.file.size() >= 5 && o_.file.compare(o_.file.size() - 5, 5, ".json") == 0) {
      d = decode<Document>(parse_json(data, "document manifest"), "document manifest");
    } else {
      d.body = TextBody{data};
    }
    if (!o_.title.empty()) d.title = o_.title;
    if (d.title.empty()) d.title = std::filesystem::path(o_.file).stem().string();
    if (!o_.remote_uri.empty()) d.remote_uri = o_.remote_uri;
    d = workspace().add_document(std::move(d));
    if (o_.json) return emit(Json(d));
    return print(d.id + "\n");
  }

  int activity_export() {
    const std::string archive = workspace().export_archive(o_.id);
    if (o_.output.empty()) return print(archive);
    write_text(o_.output, archive);
    return kExitOk;
  }

  int annotation_add() {
    auto& ws = workspace();
    const Activity a = ws.get_activity(o_.id);
    const auto [start, end] = split_span(o_.span);
    ConceptSet classification = parse_concept_list(o_.concepts, a.snapshot).concepts;
    const Annotation ann =
        ws.add_annotation(o_.id, o_.author, TextSpan{start, end}, Content{{RichText{o_.text}}}, classification);
    if (o_.json) return emit(annotation_view(ann, a.snapshot));
    return print(ann.id + "\n");
  }

  int grade_set_cmd() {
    std::optional<char> letter;
    if (!o_.letter.empty()) letter = o_.letter[0];
    return emit(Json(workspace().set_grade(o_.id, o_.student, o_.grade, letter)));
  }

  int query_run_cmd() {
    AnnotationQuery q;
    if (!o_.q.empty()) q.q = o_.q;
    if (!o_.concepts.empty()) q.concepts = o_.concepts;
    if (!o_.author.empty()) q.author = o_.author;
    return emit(annotation_query_response(workspace(), o_.id, q));
  }

  int report_activity() {
    auto& ws = workspace();
    const Activity a = ws.get_activity(o_.id);
    const Json report = activity_report(a, ws.get_group(a.group_id), ws.list_annotations(a.id),
                                        ReportOptions{o_.bin_width, o_.level});
    if (o_.format == "csv") return print(activity_report_csv(report));
    return emit(report);
  }

  int report_compare() {
    const Json report = compare_report(read_sample(o_.before), read_sample(o_.after), o_.bin_width, o_.level);
    if (o_.format == "csv") return print(compare_report_csv(report));
    return emit(report);
  }

  int serve_cmd() {
    const auto [host, port] = split_addr(o_.addr);
    HttpService service(workspace());
    const int bound = service.bind(host, port);
    err_ << "listening on http://" << host << ":" << bound << "\n" << std::flush;
    g_serving = &service;
    auto* prev_int = std::signal(SIGINT, stop_serving);
    auto* prev_term = std::signal(SIGTERM, stop_serving);
    service.run();
    std::signal(SIGINT, prev_int);
    std::signal(SIGTERM, prev_term);
    g_serving = nullptr;
    return kExitOk;
  }

  std::ostream& out_;
  std::ostream& err_;
  Options o_;
  std::unique_ptr<Store> store_;
  std::unique_ptr<Workspace> ws_;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return Cli(out, err).run(args);
}

}  // namespace ontonote
