#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "screenline/core_model.hpp"
#include "screenline/pipeline.hpp"

namespace screenline {

/// Episode-level, canonically sorted record set.
struct Timeline {
  EpisodeMeta meta;
  std::vector<AppearanceRecord> records;

  bool operator==(const Timeline&) const = default;
};

/// Rule for turning point detections into presence intervals.
struct CoalesceParams {
  std::int64_t gap_ms = 2000;
  std::int64_t tail_ms = 500;

  /// tail_ms = round(1000 / fps), falling back to 500 for a non-positive fps.
  static CoalesceParams for_fps(double fps, std::int64_t gap_ms = 2000);

  bool operator==(const CoalesceParams&) const = default;
};

/// Builds a Timeline from arbitrary-order records: validates each record,
/// sorts canonically, and rejects duplicate (t_ms, pos_index) keys.
Timeline make_timeline(const EpisodeMeta& meta, std::vector<AppearanceRecord> records);

/// Merges worker outputs and their accepted records into one timeline.
/// Chunk-offset positions are rewritten to per-episode detection ordinals,
/// so the result depends neither on the order of `outputs` or `records` nor
/// on how the episode was chunked.
Timeline merge_outputs(const EpisodeMeta& meta, const std::vector<WorkerOutput>& outputs,
                       std::vector<AppearanceRecord> records);

/// Presence intervals for one identity. Consecutive detections join when
/// their gap is at most gap_ms, or when the next detection starts before the
/// running interval's tail ends. Intervals end at last detection + tail_ms,
/// clipped to the episode.
std::vector<Interval> coalesce_intervals(const Timeline& timeline, const std::string& celebrity_id,
                                         const CoalesceParams& params);

/// As above but raises UnknownCelebrity when `known` is given and does not
/// contain the id.
std::vector<Interval> coalesce_intervals(const Timeline& timeline, const std::string& celebrity_id,
                                         const CoalesceParams& params, const std::set<std::string>& known);

/// Same rule over bare, sorted timestamps.
std::vector<Interval> coalesce_times(const std::vector<std::int64_t>& times, const std::string& celebrity_id,
                                     std::int64_t duration_ms, const CoalesceParams& params);

std::int64_t total_duration(const std::vector<Interval>& intervals);

/// Distinct celebrity ids of a timeline, ascending.
std::vector<std::string> celebrities(const Timeline& timeline);

// Timeline export: JSON Lines body plus a sidecar meta object.
Json timeline_sidecar(const Timeline& timeline, const CoalesceParams& params);
void export_timeline(const Timeline& timeline, std::ostream& records_out);

}  // namespace screenline
