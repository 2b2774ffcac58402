#include "screenline/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "screenline/error.hpp"

namespace screenline {

CoalesceParams CoalesceParams::for_fps(double fps, std::int64_t gap_ms) {
  CoalesceParams p;
  p.gap_ms = gap_ms;
  p.tail_ms = fps > 0.0 ? std::llround(1000.0 / fps) : 500;
  return p;
}

Timeline make_timeline(const EpisodeMeta& meta, std::vector<AppearanceRecord> records) {
  for (const auto& r : records) {
    if (r.episode_id != meta.episode_id) {
      fail(ErrorCode::MixedEpisodes, "record for episode '" + r.episode_id + "' in timeline of '" +
                                         meta.episode_id + "'");
    }
    validate_record(r, meta);
  }
  sort_canonical(records);
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].t_ms == records[i - 1].t_ms && records[i].pos_index == records[i - 1].pos_index) {
      fail(ErrorCode::DuplicateKey, "duplicate (t_ms, pos_index) = (" + std::to_string(records[i].t_ms) + ", " +
                                        std::to_string(records[i].pos_index) + ")");
    }
  }
  return Timeline{meta, std::move(records)};
}

Timeline merge_outputs(const EpisodeMeta& meta, const std::vector<WorkerOutput>& outputs,
                       std::vector<AppearanceRecord> records) {
  std::vector<ChunkSpan> spans;
  for (const auto& o : outputs) {
    if (o.episode_id != meta.episode_id) {
      fail(ErrorCode::MixedEpisodes, "worker output for episode '" + o.episode_id + "'");
    }
    spans.push_back(o.span);
  }
  std::sort(spans.begin(), spans.end(),
            [](const ChunkSpan& a, const ChunkSpan& b) { return a.start_ms < b.start_ms; });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start_ms < spans[i - 1].end_ms) {
      fail(ErrorCode::OverlappingChunks, "chunks [" + std::to_string(spans[i - 1].start_ms) + ", " +
                                             std::to_string(spans[i - 1].end_ms) + ") and [" +
                                             std::to_string(spans[i].start_ms) + ", " +
                                             std::to_string(spans[i].end_ms) + ") overlap");
    }
  }

  // Chunk-offset positions become episode ordinals: detections of earlier
  // chunks first, then arrival order. This is what one worker would assign.
  std::vector<const WorkerOutput*> ordered;
  for (const auto& o : outputs) ordered.push_back(&o);
  std::sort(ordered.begin(), ordered.end(),
            [](const WorkerOutput* a, const WorkerOutput* b) { return a->span.start_ms < b->span.start_ms; });
  std::map<std::uint64_t, std::pair<std::uint64_t, std::uint64_t>> base_of;  // chunk -> (episode base, count)
  std::uint64_t running = 0;
  for (const auto* o : ordered) {
    if (!base_of.emplace(o->worker, std::pair{running, std::uint64_t{o->detections}}).second) {
      fail(ErrorCode::MisalignedStage, "two outputs claim worker " + std::to_string(o->worker));
    }
    running += o->detections;
  }
  for (auto& r : records) {
    const std::uint64_t chunk = r.pos_index / kOffsetStride;
    const std::uint64_t local = r.pos_index % kOffsetStride;
    auto it = base_of.find(chunk);
    if (it == base_of.end() || local >= it->second.second) {
      fail(ErrorCode::MisalignedStage, "record pos_index " + std::to_string(r.pos_index) + " matches no worker output");
    }
    r.pos_index = it->second.first + local;
  }
  return make_timeline(meta, std::move(records));
}

std::vector<Interval> coalesce_times(const std::vector<std::int64_t>& times, const std::string& celebrity_id,
                                     std::int64_t duration_ms, const CoalesceParams& params) {
  if (params.gap_ms < 0 || params.tail_ms < 0) fail(ErrorCode::InvalidArgument, "gap_ms and tail_ms must be >= 0");
  std::vector<Interval> out;
  auto close = [&](std::int64_t start, std::int64_t last) {
    const std::int64_t end = std::min(last + params.tail_ms, duration_ms);
    if (end > start) out.push_back({celebrity_id, start, end});
  };
  std::size_t i = 0;
  while (i < times.size()) {
    const std::int64_t start = times[i];
    std::int64_t last = start;
    ++i;
    while (i < times.size() && (times[i] - last <= params.gap_ms || times[i] < last + params.tail_ms)) {
      last = times[i];
      ++i;
    }
    close(start, last);
  }
  return out;
}

std::vector<Interval> coalesce_intervals(const Timeline& timeline, const std::string& celebrity_id,
                                         const CoalesceParams& params) {
  std::vector<std::int64_t> times;
  for (const auto& r : timeline.records) {
    if (r.celebrity_id == celebrity_id) times.push_back(r.t_ms);
  }
  return coalesce_times(times, celebrity_id, timeline.meta.duration_ms, params);
}

std::vector<Interval> coalesce_intervals(const Timeline& timeline, const std::string& celebrity_id,
                                         const CoalesceParams& params, const std::set<std::string>& known) {
  if (!known.contains(celebrity_id)) fail(ErrorCode::UnknownCelebrity, "unknown celebrity '" + celebrity_id + "'");
  return coalesce_intervals(timeline, celebrity_id, params);
}

std::int64_t total_duration(const std::vector<Interval>& intervals) {
  std::int64_t sum = 0;
  for (const auto& iv : intervals) sum += iv.length();
  return sum;
}

std::vector<std::string> celebrities(const Timeline& timeline) {
  std::vector<std::string> ids;
  for (const auto& r : timeline.records) ids.push_back(r.celebrity_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

Json timeline_sidecar(const Timeline& timeline, const CoalesceParams& params) {
  return {{"episode_id", timeline.meta.episode_id},
          {"series_id", timeline.meta.series_id},
          {"season", timeline.meta.season},
          {"episode_number", timeline.meta.episode_number},
          {"duration_ms", timeline.meta.duration_ms},
          {"record_count", timeline.records.size()},
          {"params", {{"gap_ms", params.gap_ms}, {"tail_ms", params.tail_ms}}}};
}

void export_timeline(const Timeline& timeline, std::ostream& records_out) {
  write_jsonl(records_out, timeline.records);
}

}  // namespace screenline
