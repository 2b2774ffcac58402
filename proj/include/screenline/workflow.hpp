#pragma once

#include <optional>
#include <string>
#include <vector>

#include "screenline/analytics.hpp"
#include "screenline/pipeline.hpp"
#include "screenline/store.hpp"

namespace screenline {

/// Chart query against the store: an episode scope for nine chart types,
/// a series scope (plus optional seasons) for seasonal_comparison.
struct ChartRequest {
  ChartType chart_type = ChartType::total_counts;
  std::optional<std::string> episode_id;
  std::optional<std::string> series_id;
  std::vector<int> seasons;
  WindowParams window;
  CoalesceParams coalesce;
};

/// Raises UnknownEpisode (unknown scope), NotProcessed, or InvalidArgument
/// (bad parameters or scope/type mismatch).
ChartSpec get_chart(const Store& store, const ChartRequest& request);

/// Serialized chart exactly as the CLI prints it and the service returns it.
std::string chart_payload(const ChartSpec& chart);

struct ProcessResult {
  RunReport report;
  std::size_t stored = 0;
};

/// Runs the pipeline over an episode's detection stream, merges the worker
/// outputs, and stores the timeline. `detections_path` overrides the
/// episode's registered source.
ProcessResult process_episode(Store& store, const std::string& episode_id, const KnownIdentityIndex& index,
                              const RunOptions& options, const std::optional<std::string>& detections_path = {});

/// Parses an ingest body: JSON Lines of records, optionally preceded by a
/// {"meta": {...}} line. Falls back to the registered meta of `episode_id`.
Timeline parse_ingest(const Store& store, const std::string& episode_id, const std::string& body);

}  // namespace screenline
