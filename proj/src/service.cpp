#include "screenline/service.hpp"

#include <charconv>
#include <limits>

#include <httplib.h>

#include "screenline/error.hpp"
#include "screenline/workflow.hpp"

namespace screenline {

namespace {

struct ApiError {
  int status;
  std::string code;
  std::string message;
  Json detail = Json::object();
};

HttpResponse json_response(int status, const Json& body) { return {status, body.dump() + "\n", "application/json"}; }

HttpResponse error_response(const ApiError& e) {
  return json_response(e.status, {{"error_code", e.code}, {"message", e.message}, {"detail", e.detail}});
}

ApiError map_error(const Error& e) {
  switch (e.code()) {
    case ErrorCode::UnknownEpisode: return {404, "UnknownScope", e.what()};
    case ErrorCode::NotProcessed: return {409, "NotProcessed", e.what()};
    case ErrorCode::InvalidArgument: return {422, "BadParams", e.what()};
    case ErrorCode::EmptyTimeline: return {422, "EmptyTimeline", e.what()};
    case ErrorCode::ParseError: {
      ApiError out{400, "ParseError", e.what()};
      if (auto* p = dynamic_cast<const LineParseError*>(&e)) out.detail["line"] = p->line();
      return out;
    }
    case ErrorCode::DuplicateKey:
    case ErrorCode::OutOfRange:
    case ErrorCode::BadBBox:
    case ErrorCode::NegativeScore:
    case ErrorCode::MixedEpisodes: return {400, std::string(to_string(e.code())), e.what()};
    case ErrorCode::StorageFull: return {507, "StorageFull", e.what()};
    default: return {500, std::string(to_string(e.code())), e.what()};
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = s.find(sep, start);
    const std::string part = s.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!part.empty()) out.push_back(part);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

std::int64_t parse_int(const std::string& name, const std::string& text) {
  std::int64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) fail(ErrorCode::InvalidArgument, "parameter " + name + " must be an integer");
  return v;
}

std::int64_t int_param(const HttpRequest& r, const std::string& name, std::int64_t fallback) {
  auto it = r.params.find(name);
  return it == r.params.end() ? fallback : parse_int(name, it->second);
}

}  // namespace

Service::Service(Store& store, ServiceConfig config)
    : store_(store), config_(std::move(config)), server_(std::make_unique<httplib::Server>()) {
  auto adapter = [this](const httplib::Request& req, httplib::Response& res) {
    HttpRequest r{req.method, req.path, {}, req.body};
    for (const auto& [k, v] : req.params) r.params.emplace(k, v);
    const HttpResponse out = handle(r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server_->Get(".*", adapter);
  server_->Post(".*", adapter);
  server_->set_payload_max_length(config_.max_body_bytes + 1);
  if (!config_.static_dir.empty()) server_->set_mount_point("/ui", config_.static_dir);
}

Service::~Service() = default;

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) fail(ErrorCode::IoError, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) fail(ErrorCode::IoError, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::listen() { server_->listen_after_bind(); }

void Service::stop() { server_->stop(); }

HttpResponse Service::handle(const HttpRequest& request) {
  try {
    return route(request);
  } catch (const Error& e) {
    return error_response(map_error(e));
  } catch (const std::exception& e) {
    return error_response({500, "Internal", e.what()});
  }
}

HttpResponse Service::route(const HttpRequest& request) {
  const auto parts = split(request.path, '/');
  const bool get = request.method == "GET";
  const bool post = request.method == "POST";
  auto not_found = [&] { return error_response({404, "UnknownScope", "no route for " + request.path}); };
  auto bad_method = [&] { return error_response({405, "MethodNotAllowed", request.method + " " + request.path}); };

  if (parts.size() == 1 && parts[0] == "healthz") {
    return get ? json_response(200, {{"status", "ok"}}) : bad_method();
  }
  if (parts.empty()) return not_found();

  if (parts[0] == "episodes") {
    if (parts.size() == 1) {
      if (!get) return bad_method();
      Json list = Json::array();
      for (const auto& m : store_.episodes()) list.push_back(to_json(m));
      return json_response(200, {{"episodes", list}});
    }
    const std::string& id = parts[1];
    if (parts.size() == 2) {
      if (!get) return bad_method();
      const auto meta = store_.episode(id);
      if (!meta) fail(ErrorCode::UnknownEpisode, "unknown episode '" + id + "'");
      Json body = to_json(*meta);
      body["record_count"] = meta->processed ? store_.timeline(id)->records.size() : 0;
      return json_response(200, body);
    }
    if (parts.size() == 3 && parts[2] == "appearances") {
      if (!get) return bad_method();
      QueryFilter f;
      f.episode_id = id;
      if (auto it = request.params.find("celebrity"); it != request.params.end()) {
        for (const auto& c : split(it->second, ',')) f.celebrities.insert(c);
      }
      if (request.params.contains("from_ms") || request.params.contains("to_ms")) {
        f.range = TimeRange{int_param(request, "from_ms", 0),
                            int_param(request, "to_ms", std::numeric_limits<std::int64_t>::max())};
      }
      Json records = Json::array();
      for (const auto& r : store_.query_appearances(f)) records.push_back(to_json(r));
      return json_response(200, {{"episode_id", id}, {"count", records.size()}, {"records", records}});
    }
    if (parts.size() == 4 && parts[2] == "charts") {
      return get ? chart(request, id, std::nullopt, parts[3]) : bad_method();
    }
    if (parts.size() == 3 && parts[2] == "ingest") return post ? ingest(id, request) : bad_method();
    if (parts.size() == 3 && parts[2] == "process") return post ? process(id, request) : bad_method();
    return not_found();
  }

  if (parts[0] == "series" && parts.size() == 4 && parts[2] == "charts") {
    return get ? chart(request, std::nullopt, parts[1], parts[3]) : bad_method();
  }
  return not_found();
}

HttpResponse Service::chart(const HttpRequest& request, const std::optional<std::string>& episode,
                            const std::optional<std::string>& series, const std::string& type) {
  const auto chart_type = chart_type_from_string(type);
  if (!chart_type) return error_response({422, "BadParams", "unknown chart type '" + type + "'"});

  ChartRequest req;
  req.chart_type = *chart_type;
  req.episode_id = episode;
  req.series_id = series;
  req.window.bucket_ms = int_param(request, "bucket_ms", req.window.bucket_ms);
  req.window.coappearance_window_ms = int_param(request, "window_ms", req.window.coappearance_window_ms);
  req.window.segment_ms = int_param(request, "segment_ms", req.window.segment_ms);
  req.window.min_edge_weight = int_param(request, "min_edge_weight", req.window.min_edge_weight);
  req.coalesce.gap_ms = int_param(request, "gap_ms", req.coalesce.gap_ms);
  req.coalesce.tail_ms = int_param(request, "tail_ms", req.coalesce.tail_ms);
  if (auto it = request.params.find("seasons"); it != request.params.end()) {
    for (const auto& s : split(it->second, ',')) req.seasons.push_back(static_cast<int>(parse_int("seasons", s)));
  }
  return {200, chart_payload(get_chart(store_, req)), "application/json"};
}

HttpResponse Service::ingest(const std::string& episode_id, const HttpRequest& request) {
  if (request.body.size() > config_.max_body_bytes) {
    return error_response({413, "TooLarge", "body exceeds " + std::to_string(config_.max_body_bytes) + " bytes"});
  }
  const Timeline timeline = parse_ingest(store_, episode_id, request.body);
  const std::size_t stored = store_.put_timeline(timeline);
  return json_response(200, {{"episode_id", episode_id}, {"stored", stored}});
}

HttpResponse Service::process(const std::string& episode_id, const HttpRequest& request) {
  Json body = Json::object();
  if (!request.body.empty()) {
    body = Json::parse(request.body, nullptr, false);
    if (!body.is_object()) return error_response({400, "ParseError", "process body must be a JSON object"});
  }
  RunOptions options = config_.run;
  std::string index_path = config_.index_path;
  std::optional<std::string> detections;
  std::optional<Metric> metric;
  try {
    index_path = body.value("index", index_path);
    if (body.contains("detections")) detections = body["detections"].get<std::string>();
    if (body.contains("metric")) metric = metric_from_string(body["metric"].get<std::string>());
    options.n_workers = body.value("workers", options.n_workers);
    options.batch.detect_batch = body.value("detect_batch", options.batch.detect_batch);
    options.batch.embed_batch = body.value("embed_batch", options.batch.embed_batch);
    options.threshold = body.value("threshold", options.threshold);
    options.k = body.value("k", options.k);
  } catch (const Json::exception& e) {
    return error_response({422, "BadParams", e.what()});
  }
  if (index_path.empty()) return error_response({422, "BadParams", "no gallery index configured"});
  if (!store_.episode(episode_id)) fail(ErrorCode::UnknownEpisode, "unknown episode '" + episode_id + "'");

  KnownIdentityIndex index = load_index(index_path);
  if (metric && *metric != index.metric()) index = KnownIdentityIndex::build(index.ids(), index.vectors(), index.dim(), *metric);
  const ProcessResult result = process_episode(store_, episode_id, index, options, detections);
  Json out = result.report.to_json();
  out["stored"] = result.stored;
  return json_response(200, out);
}

}  // namespace screenline
