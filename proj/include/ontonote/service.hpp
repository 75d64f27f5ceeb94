#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "ontonote/json_io.hpp"
#include "ontonote/workspace.hpp"

namespace httplib {
class Server;
}

namespace ontonote {

/// Selection for GET /activities/{id}/annotations and `query run`. At most
/// one of `q` (query grammar) and `concepts` (comma-separated paths).
struct AnnotationQuery {
  std::optional<std::string> q;
  std::optional<std::string> concepts;
  std::optional<std::string> author;
};

/// Annotation record plus the canonical references of its concepts.
Json annotation_view(const Annotation& a, const Ontology& snapshot);
Json activity_view(const Activity& a);
Json ontology_view(const Ontology& o);

/// The response document shared by the HTTP endpoint and the CLI, so both
/// emit byte-identical JSON for the same store. `visible` restricts the
/// listing to what the caller may read.
Json annotation_query_response(const Workspace& ws, const std::string& activity_id, const AnnotationQuery& request,
                               const std::function<bool(const Annotation&)>& visible = {});

/// Serialization used for every JSON response body.
std::string render_json(const Json& j);

/// Error body {code, message, status[, position]}.
Json error_body(const Error& e);

/// JSON-over-HTTP front end. Handlers keep no state between requests; all
/// writes go through the store's compare-and-set.
class HttpService {
 public:
  explicit HttpService(Workspace& ws);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Port 0 binds an ephemeral port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void run();
  void stop();

 private:
  std::unique_ptr<httplib::Server> server_;
  std::shared_ptr<void> routes_;  // handlers point into it
};

}  // namespace ontonote
