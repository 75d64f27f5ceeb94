// An HttpService on an ephemeral loopback port, served from a background
// thread for the lifetime of the object.
#pragma once

#include <httplib.h>

#include <string>
#include <thread>

#include "ontonote/service.hpp"

namespace ontonote::testing {

class RunningService {
 public:
  explicit RunningService(Workspace& ws) : service_(ws) {
    port_ = service_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_.run(); });
  }
  ~RunningService() {
    service_.stop();
    thread_.join();
  }
  RunningService(const RunningService&) = delete;
  RunningService& operator=(const RunningService&) = delete;

  [[nodiscard]] int port() const { return port_; }

  /// Client with a bearer token (none when empty).
  [[nodiscard]] httplib::Client client(const std::string& token = "") const {
    httplib::Client c("127.0.0.1", port_);
    c.set_connection_timeout(5);
    c.set_read_timeout(10);
    if (!token.empty()) c.set_bearer_token_auth(token);
    return c;
  }

 private:
  HttpService service_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace ontonote::testing
