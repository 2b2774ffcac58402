#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "screenline/aggregation.hpp"

namespace screenline {

enum class ChartType {
  per_minute_bars,
  total_counts,
  total_durations,
  trend_lines,
  distribution_pie,
  coappearance_matrix,
  coappearance_network,
  stacked_area,
  seasonal_comparison,
  segment_heatmap,
};

inline constexpr int kChartSchemaVersion = 1;

std::string to_string(ChartType type);
std::optional<ChartType> chart_type_from_string(const std::string& name);
const std::vector<ChartType>& all_chart_types();

struct AxisSpec {
  std::string label;
  std::string kind;  // "time" | "category" | "segment"

  bool operator==(const AxisSpec&) const = default;
};

using XValue = std::variant<std::int64_t, std::string>;

struct Point {
  XValue x;
  double y = 0.0;

  bool operator==(const Point&) const = default;
};

struct Series {
  std::string name;
  std::vector<Point> points;

  bool operator==(const Series&) const = default;
};

struct MatrixSpec {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> cells;

  bool operator==(const MatrixSpec&) const = default;
};

struct GraphNode {
  std::string id;
  double weight = 0.0;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string a;
  std::string b;
  double weight = 0.0;

  bool operator==(const GraphEdge&) const = default;
};

struct GraphSpec {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  bool operator==(const GraphSpec&) const = default;
};

/// Renderer-neutral chart payload. Exactly one of series / matrix / graph
/// is set, depending on the chart type.
struct ChartSpec {
  ChartType chart_type = ChartType::total_counts;
  std::string title;
  AxisSpec x_axis;
  std::optional<std::vector<Series>> series;
  std::optional<MatrixSpec> matrix;
  std::optional<GraphSpec> graph;
  Json meta = Json::object();

  Json to_json() const;
  /// Stable serialization shared by the CLI and the HTTP service.
  std::string dump() const;
  static ChartSpec from_json(const Json& j);

  bool operator==(const ChartSpec&) const = default;
};

struct WindowParams {
  std::int64_t coappearance_window_ms = 1000;
  std::int64_t bucket_ms = 60000;
  std::int64_t segment_ms = 300000;
  std::int64_t min_edge_weight = 1;
};

/// Detections per (celebrity, bucket). Rows follow `celebrities`, ascending.
struct CountMatrix {
  std::vector<std::string> celebrities;
  std::int64_t bucket_ms = 60000;
  std::size_t n_buckets = 0;
  std::vector<std::vector<std::int64_t>> counts;
};

/// Symmetric co-appearance counts with a zero diagonal.
struct CoMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::int64_t>> cells;

  bool operator==(const CoMatrix&) const = default;
};

/// Detection counts per celebrity.
std::map<std::string, std::int64_t> count_by_celebrity(const Timeline& timeline);

CountMatrix bucket_counts(const Timeline& timeline, std::int64_t bucket_ms);

struct PerMinuteResult {
  ChartSpec chart;
  CountMatrix matrix;
};

PerMinuteResult per_minute_counts(const Timeline& timeline, std::int64_t bucket_ms);
ChartSpec total_counts(const Timeline& timeline);
ChartSpec total_durations(const Timeline& timeline, const CoalesceParams& params);
ChartSpec trend_lines(const Timeline& timeline, std::int64_t bucket_ms);
ChartSpec distribution_pie(const Timeline& timeline);

CoMatrix coappearance_counts(const Timeline& timeline, std::int64_t window_ms);
ChartSpec coappearance_matrix(const Timeline& timeline, std::int64_t window_ms);
ChartSpec coappearance_network(const CoMatrix& matrix, const std::map<std::string, std::int64_t>& node_weights,
                               std::int64_t min_edge_weight);
ChartSpec coappearance_network(const Timeline& timeline, std::int64_t window_ms, std::int64_t min_edge_weight);

ChartSpec stacked_area(const Timeline& timeline, std::int64_t bucket_ms, const CoalesceParams& params);

struct SeasonGroup {
  std::string series_id;
  int season = 1;
  std::vector<std::reference_wrapper<const Timeline>> episodes;
};

ChartSpec seasonal_comparison(const std::vector<SeasonGroup>& groups, const CoalesceParams& params);

ChartSpec segment_heatmap(const Timeline& timeline, std::int64_t segment_ms);

/// Dispatches an episode-scoped chart type to its transform.
ChartSpec episode_chart(ChartType type, const Timeline& timeline, const WindowParams& window,
                        const CoalesceParams& coalesce);

/// "hh:mm:ss" for a millisecond offset.
std::string format_clock(std::int64_t ms);

}  // namespace screenline
