#include "screenline/workflow.hpp"

#include <algorithm>
#include <memory>
#include <set>
#include <sstream>

#include "screenline/error.hpp"

namespace screenline {

namespace {

void check_params(const ChartRequest& r) {
  auto bad = [](const std::string& what) { fail(ErrorCode::InvalidArgument, what); };
  if (r.window.bucket_ms < 1) bad("bucket_ms must be >= 1");
  if (r.window.segment_ms < 1) bad("segment_ms must be >= 1");
  if (r.window.coappearance_window_ms < 0) bad("window_ms must be >= 0");
  if (r.window.min_edge_weight < 1) bad("min_edge_weight must be >= 1");
  if (r.coalesce.gap_ms < 0) bad("gap_ms must be >= 0");
  if (r.coalesce.tail_ms < 0) bad("tail_ms must be >= 0");
}

ChartSpec seasonal(const Store& store, const ChartRequest& request) {
  const std::string& series = *request.series_id;
  std::vector<EpisodeMeta> members;
  for (auto& m : store.episodes()) {
    if (m.series_id == series) members.push_back(m);
  }
  if (members.empty()) fail(ErrorCode::UnknownEpisode, "unknown series '" + series + "'");

  std::set<int> seasons(request.seasons.begin(), request.seasons.end());
  if (seasons.empty()) {
    for (const auto& m : members) seasons.insert(m.season);
  }

  std::vector<std::shared_ptr<const Timeline>> keep;
  std::vector<SeasonGroup> groups;
  for (int season : seasons) {
    SeasonGroup g{series, season, {}};
    for (const auto& m : members) {
      if (m.season != season) continue;
      if (!m.processed) fail(ErrorCode::NotProcessed, "episode '" + m.episode_id + "' is not processed");
      keep.push_back(store.timeline(m.episode_id));
      g.episodes.emplace_back(*keep.back());
    }
    groups.push_back(std::move(g));
  }
  return seasonal_comparison(groups, request.coalesce);
}

}  // namespace

ChartSpec get_chart(const Store& store, const ChartRequest& request) {
  check_params(request);
  if (request.chart_type == ChartType::seasonal_comparison) {
    if (!request.series_id || request.episode_id) {
      fail(ErrorCode::InvalidArgument, "seasonal_comparison takes a series scope");
    }
    return seasonal(store, request);
  }
  if (!request.episode_id || request.series_id) {
    fail(ErrorCode::InvalidArgument, to_string(request.chart_type) + " takes an episode scope");
  }
  const auto meta = store.episode(*request.episode_id);
  if (!meta) fail(ErrorCode::UnknownEpisode, "unknown episode '" + *request.episode_id + "'");
  if (!meta->processed) fail(ErrorCode::NotProcessed, "episode '" + *request.episode_id + "' is not processed");
  const auto timeline = store.timeline(*request.episode_id);
  return episode_chart(request.chart_type, *timeline, request.window, request.coalesce);
}

std::string chart_payload(const ChartSpec& chart) { return chart.dump() + "\n"; }

ProcessResult process_episode(Store& store, const std::string& episode_id, const KnownIdentityIndex& index,
                              const RunOptions& options, const std::optional<std::string>& detections_path) {
  const auto meta = store.episode(episode_id);
  if (!meta) fail(ErrorCode::UnknownEpisode, "unknown episode '" + episode_id + "'");
  const std::string path = detections_path.value_or(meta->source);
  if (path.empty()) fail(ErrorCode::InvalidArgument, "episode '" + episode_id + "' has no registered detection stream");

  const auto frames = read_detections(path);
  EpisodeRun run = run_episode(*meta, frames, index, synthetic_stages(), options);
  Timeline timeline = merge_outputs(*meta, run.outputs, std::move(run.records));
  ProcessResult result;
  result.stored = store.put_timeline(timeline);
  result.report = run.report;
  return result;
}

Timeline parse_ingest(const Store& store, const std::string& episode_id, const std::string& body) {
  std::istringstream in(body);
  std::string line;
  std::size_t line_no = 0;
  std::optional<EpisodeMeta> meta;
  std::string rest;
  std::size_t first_record_line = 1;

  // Find the first non-blank line; it may carry the meta header.
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json head = Json::parse(line, nullptr, false);
    if (head.is_object() && head.contains("meta") && head.size() == 1) {
      try {
        meta = meta_from_json(head["meta"]);
      } catch (const Error& e) {
        throw LineParseError(line_no, "line " + std::to_string(line_no) + ": " + e.what());
      }
      first_record_line = line_no + 1;
    } else {
      rest = line + "\n";
      first_record_line = line_no;
    }
    break;
  }
  rest.append(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());

  const auto registered = store.episode(episode_id);
  if (meta) {
    if (meta->episode_id != episode_id) {
      fail(ErrorCode::MixedEpisodes, "meta names episode '" + meta->episode_id + "', path names '" + episode_id + "'");
    }
    if (registered && meta->source.empty()) meta->source = registered->source;
  } else {
    if (!registered) fail(ErrorCode::UnknownEpisode, "unknown episode '" + episode_id + "' and no meta line given");
    meta = *registered;
  }
  auto records = parse_jsonl(rest, first_record_line);
  return make_timeline(*meta, std::move(records));
}

}  // namespace screenline
