#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>

#include "screenline/pipeline.hpp"
#include "screenline/store.hpp"
#include "screenline/vector_index.hpp"

namespace httplib {
class Server;
}

namespace screenline {

struct HttpRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> params;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct ServiceConfig {
  std::size_t max_body_bytes = 64 * 1024 * 1024;
  // Gallery used by POST /episodes/{id}/process; the request body may name
  // another one.
  std::string index_path;
  RunOptions run;
  // Optional static dashboard bundle, served under /ui.
  std::string static_dir;
};

/// HTTP facade over the store. `handle` is transport-free so every route can
/// be exercised directly; `listen` binds it to a socket.
///
/// Error bodies are {"error_code", "message", "detail"} with codes:
///   404 UnknownScope, 409 NotProcessed, 422 BadParams, 400 ParseError /
///   DuplicateKey / record validation codes, 413 TooLarge.
class Service {
 public:
  Service(Store& store, ServiceConfig config);
  ~Service();

  HttpResponse handle(const HttpRequest& request);

  /// Binds to host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Requires a prior bind().
  void listen();
  void stop();

 private:
  HttpResponse route(const HttpRequest& request);
  HttpResponse chart(const HttpRequest& request, const std::optional<std::string>& episode,
                     const std::optional<std::string>& series, const std::string& type);
  HttpResponse ingest(const std::string& episode_id, const HttpRequest& request);
  HttpResponse process(const std::string& episode_id, const HttpRequest& request);

  Store& store_;
  ServiceConfig config_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace screenline
