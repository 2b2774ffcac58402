#include "screenline/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "screenline/error.hpp"

namespace screenline {

namespace {

const std::vector<std::pair<ChartType, const char*>>& chart_names() {
  static const std::vector<std::pair<ChartType, const char*>> names = {
      {ChartType::per_minute_bars, "per_minute_bars"},
      {ChartType::total_counts, "total_counts"},
      {ChartType::total_durations, "total_durations"},
      {ChartType::trend_lines, "trend_lines"},
      {ChartType::distribution_pie, "distribution_pie"},
      {ChartType::coappearance_matrix, "coappearance_matrix"},
      {ChartType::coappearance_network, "coappearance_network"},
      {ChartType::stacked_area, "stacked_area"},
      {ChartType::seasonal_comparison, "seasonal_comparison"},
      {ChartType::segment_heatmap, "segment_heatmap"},
  };
  return names;
}

void require_positive(std::int64_t v, const char* name) {
  if (v < 1) fail(ErrorCode::InvalidArgument, std::string(name) + " must be >= 1");
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return a <= 0 ? 0 : (a + b - 1) / b; }

Json x_to_json(const XValue& x) {
  return std::visit([](const auto& v) { return Json(v); }, x);
}

XValue x_from_json(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  return j.get<std::int64_t>();
}

// Category order used by bar/pie charts: larger value first, then id.
template <typename T>
std::vector<std::pair<std::string, T>> ranked(const std::map<std::string, T>& values) {
  std::vector<std::pair<std::string, T>> out(values.begin(), values.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

Json episode_echo(const Timeline& t) {
  return {{"episode_id", t.meta.episode_id}, {"duration_ms", t.meta.duration_ms}};
}

std::map<std::string, std::vector<Interval>> intervals_by_celebrity(const Timeline& timeline,
                                                                     const CoalesceParams& params) {
  std::map<std::string, std::vector<std::int64_t>> times;
  for (const auto& r : timeline.records) times[r.celebrity_id].push_back(r.t_ms);
  std::map<std::string, std::vector<Interval>> out;
  for (const auto& [id, ts] : times) out[id] = coalesce_times(ts, id, timeline.meta.duration_ms, params);
  return out;
}

Json coalesce_echo(const CoalesceParams& p) { return {{"gap_ms", p.gap_ms}, {"tail_ms", p.tail_ms}}; }

}  // namespace

std::string to_string(ChartType type) {
  for (const auto& [t, name] : chart_names()) {
    if (t == type) return name;
  }
  return "unknown";
}

std::optional<ChartType> chart_type_from_string(const std::string& name) {
  for (const auto& [t, n] : chart_names()) {
    if (name == n) return t;
  }
  return std::nullopt;
}

const std::vector<ChartType>& all_chart_types() {
  static const std::vector<ChartType> types = [] {
    std::vector<ChartType> v;
    for (const auto& [t, n] : chart_names()) v.push_back(t);
    return v;
  }();
  return types;
}

std::string format_clock(std::int64_t ms) {
  const std::int64_t s = ms / 1000;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02lld:%02lld:%02lld", static_cast<long long>(s / 3600),
                static_cast<long long>(s / 60 % 60), static_cast<long long>(s % 60));
  return buf;
}

// ChartSpec JSON

Json ChartSpec::to_json() const {
  Json j = {{"schema", kChartSchemaVersion},
            {"chart_type", to_string(chart_type)},
            {"title", title},
            {"x_axis", {{"label", x_axis.label}, {"kind", x_axis.kind}}},
            {"meta", meta}};
  if (series) {
    Json arr = Json::array();
    for (const auto& s : *series) {
      Json pts = Json::array();
      for (const auto& p : s.points) pts.push_back(Json::array({x_to_json(p.x), p.y}));
      arr.push_back({{"name", s.name}, {"points", pts}});
    }
    j["series"] = arr;
  }
  if (matrix) {
    j["matrix"] = {{"row_labels", matrix->row_labels}, {"col_labels", matrix->col_labels}, {"cells", matrix->cells}};
  }
  if (graph) {
    Json nodes = Json::array();
    for (const auto& n : graph->nodes) nodes.push_back({{"id", n.id}, {"weight", n.weight}});
    Json edges = Json::array();
    for (const auto& e : graph->edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"weight", e.weight}});
    j["graph"] = {{"nodes", nodes}, {"edges", edges}};
  }
  return j;
}

std::string ChartSpec::dump() const { return to_json().dump(); }

ChartSpec ChartSpec::from_json(const Json& j) {
  try {
    if (j.at("schema").get<int>() != kChartSchemaVersion) {
      fail(ErrorCode::VersionUnsupported, "chart schema " + j.at("schema").dump());
    }
    ChartSpec c;
    auto type = chart_type_from_string(j.at("chart_type").get<std::string>());
    if (!type) fail(ErrorCode::ParseError, "unknown chart_type");
    c.chart_type = *type;
    c.title = j.at("title").get<std::string>();
    c.x_axis = {j.at("x_axis").at("label").get<std::string>(), j.at("x_axis").at("kind").get<std::string>()};
    c.meta = j.value("meta", Json::object());
    if (j.contains("series")) {
      c.series.emplace();
      for (const auto& s : j["series"]) {
        Series out{s.at("name").get<std::string>(), {}};
        for (const auto& p : s.at("points")) out.points.push_back({x_from_json(p.at(0)), p.at(1).get<double>()});
        c.series->push_back(std::move(out));
      }
    }
    if (j.contains("matrix")) {
      const auto& m = j["matrix"];
      c.matrix = MatrixSpec{m.at("row_labels").get<std::vector<std::string>>(),
                            m.at("col_labels").get<std::vector<std::string>>(),
                            m.at("cells").get<std::vector<std::vector<double>>>()};
    }
    if (j.contains("graph")) {
      c.graph.emplace();
      for (const auto& n : j["graph"].at("nodes")) {
        c.graph->nodes.push_back({n.at("id").get<std::string>(), n.at("weight").get<double>()});
      }
      for (const auto& e : j["graph"].at("edges")) {
        c.graph->edges.push_back(
            {e.at("a").get<std::string>(), e.at("b").get<std::string>(), e.at("weight").get<double>()});
      }
    }
    return c;
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad chart JSON: ") + e.what());
  }
}

// Transforms

std::map<std::string, std::int64_t> count_by_celebrity(const Timeline& timeline) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& r : timeline.records) ++counts[r.celebrity_id];
  return counts;
}

CountMatrix bucket_counts(const Timeline& timeline, std::int64_t bucket_ms) {
  require_positive(bucket_ms, "bucket_ms");
  CountMatrix m;
  m.bucket_ms = bucket_ms;
  m.celebrities = celebrities(timeline);
  if (timeline.records.empty()) return m;
  std::int64_t n = ceil_div(timeline.meta.duration_ms, bucket_ms);
  for (const auto& r : timeline.records) n = std::max(n, r.t_ms / bucket_ms + 1);
  m.n_buckets = static_cast<std::size_t>(n);
  m.counts.assign(m.celebrities.size(), std::vector<std::int64_t>(m.n_buckets, 0));
  for (const auto& r : timeline.records) {
    const auto row = std::lower_bound(m.celebrities.begin(), m.celebrities.end(), r.celebrity_id) -
                     m.celebrities.begin();
    ++m.counts[static_cast<std::size_t>(row)][static_cast<std::size_t>(r.t_ms / bucket_ms)];
  }
  return m;
}

namespace {

std::vector<Series> pivot(const CountMatrix& m) {
  std::vector<Series> out;
  for (std::size_t c = 0; c < m.celebrities.size(); ++c) {
    Series s{m.celebrities[c], {}};
    for (std::size_t b = 0; b < m.n_buckets; ++b) {
      s.points.push_back({static_cast<std::int64_t>(b), static_cast<double>(m.counts[c][b])});
    }
    out.push_back(std::move(s));
  }
  return out;
}

AxisSpec bucket_axis(std::int64_t bucket_ms) { return {bucket_ms == 60000 ? "minute" : "bucket", "time"}; }

}  // namespace

PerMinuteResult per_minute_counts(const Timeline& timeline, std::int64_t bucket_ms) {
  PerMinuteResult out;
  out.matrix = bucket_counts(timeline, bucket_ms);
  ChartSpec& c = out.chart;
  c.chart_type = ChartType::per_minute_bars;
  c.title = "Appearances per time bucket";
  c.x_axis = bucket_axis(bucket_ms);
  c.series = pivot(out.matrix);
  c.meta = episode_echo(timeline);
  c.meta["bucket_ms"] = bucket_ms;
  c.meta["n_buckets"] = out.matrix.n_buckets;
  c.meta["stacked"] = true;
  c.meta["count_semantics"] = "detections";
  return out;
}

ChartSpec total_counts(const Timeline& timeline) {
  ChartSpec c;
  c.chart_type = ChartType::total_counts;
  c.title = "Total appearances";
  c.x_axis = {"celebrity", "category"};
  Series s{"count", {}};
  for (const auto& [id, n] : ranked(count_by_celebrity(timeline))) s.points.push_back({id, static_cast<double>(n)});
  c.series = std::vector<Series>{std::move(s)};
  c.meta = episode_echo(timeline);
  c.meta["count_semantics"] = "detections";
  return c;
}

ChartSpec total_durations(const Timeline& timeline, const CoalesceParams& params) {
  std::map<std::string, std::int64_t> durations;
  for (const auto& [id, ivs] : intervals_by_celebrity(timeline, params)) durations[id] = total_duration(ivs);
  ChartSpec c;
  c.chart_type = ChartType::total_durations;
  c.title = "Total screen time";
  c.x_axis = {"celebrity", "category"};
  Series s{"duration_ms", {}};
  for (const auto& [id, ms] : ranked(durations)) s.points.push_back({id, static_cast<double>(ms)});
  c.series = std::vector<Series>{std::move(s)};
  c.meta = episode_echo(timeline);
  c.meta["coalesce"] = coalesce_echo(params);
  c.meta["unit"] = "ms";
  return c;
}

ChartSpec trend_lines(const Timeline& timeline, std::int64_t bucket_ms) {
  const CountMatrix m = bucket_counts(timeline, bucket_ms);
  ChartSpec c;
  c.chart_type = ChartType::trend_lines;
  c.title = "Appearance trend";
  c.x_axis = bucket_axis(bucket_ms);
  c.series = pivot(m);
  c.meta = episode_echo(timeline);
  c.meta["bucket_ms"] = bucket_ms;
  c.meta["n_buckets"] = m.n_buckets;
  c.meta["count_semantics"] = "detections";
  return c;
}

ChartSpec distribution_pie(const Timeline& timeline) {
  if (timeline.records.empty()) fail(ErrorCode::EmptyTimeline, "no appearances to distribute");
  const auto counts = count_by_celebrity(timeline);
  const auto total = static_cast<double>(timeline.records.size());
  ChartSpec c;
  c.chart_type = ChartType::distribution_pie;
  c.title = "Share of appearances";
  c.x_axis = {"celebrity", "category"};
  Series s{"share", {}};
  for (const auto& [id, n] : ranked(counts)) s.points.push_back({id, static_cast<double>(n) / total});
  c.series = std::vector<Series>{std::move(s)};
  c.meta = episode_echo(timeline);
  c.meta["total"] = timeline.records.size();
  c.meta["count_semantics"] = "detections";
  return c;
}

CoMatrix coappearance_counts(const Timeline& timeline, std::int64_t window_ms) {
  if (window_ms < 0) fail(ErrorCode::InvalidArgument, "window_ms must be >= 0");
  CoMatrix m;
  m.labels = celebrities(timeline);
  const std::size_t n = m.labels.size();
  m.cells.assign(n, std::vector<std::int64_t>(n, 0));

  // bucket -> set of label rows present in it
  std::map<std::int64_t, std::set<std::size_t>> buckets;
  for (const auto& r : timeline.records) {
    const std::int64_t key = window_ms > 0 ? r.t_ms / window_ms : r.t_ms;
    const auto row = static_cast<std::size_t>(std::lower_bound(m.labels.begin(), m.labels.end(), r.celebrity_id) -
                                              m.labels.begin());
    buckets[key].insert(row);
  }
  for (const auto& [key, present] : buckets) {
    for (auto a = present.begin(); a != present.end(); ++a) {
      for (auto b = std::next(a); b != present.end(); ++b) {
        ++m.cells[*a][*b];
        ++m.cells[*b][*a];
      }
    }
  }
  return m;
}

ChartSpec coappearance_matrix(const Timeline& timeline, std::int64_t window_ms) {
  const CoMatrix m = coappearance_counts(timeline, window_ms);
  ChartSpec c;
  c.chart_type = ChartType::coappearance_matrix;
  c.title = "Co-appearance matrix";
  c.x_axis = {"celebrity", "category"};
  MatrixSpec spec{m.labels, m.labels, {}};
  for (const auto& row : m.cells) spec.cells.emplace_back(row.begin(), row.end());
  c.matrix = std::move(spec);
  c.meta = episode_echo(timeline);
  c.meta["window_ms"] = window_ms;
  c.meta["count_semantics"] = "windows with both present";
  return c;
}

ChartSpec coappearance_network(const CoMatrix& m, const std::map<std::string, std::int64_t>& node_weights,
                               std::int64_t min_edge_weight) {
  require_positive(min_edge_weight, "min_edge_weight");
  const std::size_t n = m.labels.size();
  if (m.cells.size() != n) fail(ErrorCode::AsymmetricInput, "matrix is not square");
  for (std::size_t i = 0; i < n; ++i) {
    if (m.cells[i].size() != n) fail(ErrorCode::AsymmetricInput, "matrix is not square");
    if (m.cells[i][i] != 0) fail(ErrorCode::AsymmetricInput, "non-zero diagonal for '" + m.labels[i] + "'");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (m.cells[i][j] != m.cells[j][i]) {
        fail(ErrorCode::AsymmetricInput, "cells (" + m.labels[i] + ", " + m.labels[j] + ") differ");
      }
    }
  }

  GraphSpec g;
  for (const auto& id : m.labels) {
    auto it = node_weights.find(id);
    g.nodes.push_back({id, it == node_weights.end() ? 0.0 : static_cast<double>(it->second)});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (m.cells[i][j] >= min_edge_weight) {
        g.edges.push_back({m.labels[i], m.labels[j], static_cast<double>(m.cells[i][j])});
      }
    }
  }
  std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& x, const GraphEdge& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    if (x.a != y.a) return x.a < y.a;
    return x.b < y.b;
  });

  ChartSpec c;
  c.chart_type = ChartType::coappearance_network;
  c.title = "Co-appearance network";
  c.x_axis = {"celebrity", "category"};
  c.graph = std::move(g);
  c.meta = {{"min_edge_weight", min_edge_weight}, {"node_weight", "detections"}};
  return c;
}

ChartSpec coappearance_network(const Timeline& timeline, std::int64_t window_ms, std::int64_t min_edge_weight) {
  ChartSpec c = coappearance_network(coappearance_counts(timeline, window_ms), count_by_celebrity(timeline),
                                     min_edge_weight);
  Json meta = episode_echo(timeline);
  meta.update(c.meta);
  meta["window_ms"] = window_ms;
  c.meta = std::move(meta);
  return c;
}

ChartSpec stacked_area(const Timeline& timeline, std::int64_t bucket_ms, const CoalesceParams& params) {
  require_positive(bucket_ms, "bucket_ms");
  const auto by_celeb = intervals_by_celebrity(timeline, params);
  const std::size_t n_buckets =
      timeline.records.empty() ? 0 : static_cast<std::size_t>(std::max<std::int64_t>(1, ceil_div(timeline.meta.duration_ms, bucket_ms)));

  std::map<std::string, std::int64_t> durations;
  for (const auto& [id, ivs] : by_celeb) durations[id] = total_duration(ivs);

  std::vector<Series> layers;
  for (const auto& [id, total] : ranked(durations)) {
    std::vector<std::int64_t> overlap(n_buckets, 0);
    for (const auto& iv : by_celeb.at(id)) {
      for (std::int64_t b = iv.start_ms / bucket_ms; b * bucket_ms < iv.end_ms; ++b) {
        const std::int64_t lo = std::max(iv.start_ms, b * bucket_ms);
        const std::int64_t hi = std::min(iv.end_ms, (b + 1) * bucket_ms);
        if (static_cast<std::size_t>(b) < n_buckets && hi > lo) overlap[static_cast<std::size_t>(b)] += hi - lo;
      }
    }
    Series s{id, {}};
    for (std::size_t b = 0; b < n_buckets; ++b) {
      s.points.push_back({static_cast<std::int64_t>(b), static_cast<double>(overlap[b]) / static_cast<double>(bucket_ms)});
    }
    layers.push_back(std::move(s));
  }

  ChartSpec c;
  c.chart_type = ChartType::stacked_area;
  c.title = "Presence over time";
  c.x_axis = bucket_axis(bucket_ms);
  c.series = std::move(layers);
  c.meta = episode_echo(timeline);
  c.meta["bucket_ms"] = bucket_ms;
  c.meta["n_buckets"] = n_buckets;
  c.meta["coalesce"] = coalesce_echo(params);
  c.meta["value"] = "fraction of bucket present";
  return c;
}

ChartSpec seasonal_comparison(const std::vector<SeasonGroup>& groups, const CoalesceParams& params) {
  if (groups.empty()) fail(ErrorCode::InvalidArgument, "need at least one season");
  const std::string& series_id = groups.front().series_id;
  std::vector<SeasonGroup> sorted = groups;
  std::stable_sort(sorted.begin(), sorted.end(), [](const SeasonGroup& a, const SeasonGroup& b) { return a.season < b.season; });

  std::set<std::string> everyone;
  std::vector<std::map<std::string, std::int64_t>> per_season(sorted.size());
  for (std::size_t g = 0; g < sorted.size(); ++g) {
    if (sorted[g].series_id != series_id) fail(ErrorCode::MixedSeries, "groups span several series");
    for (const Timeline& t : sorted[g].episodes) {
      if (t.meta.series_id != series_id) {
        fail(ErrorCode::MixedSeries, "episode '" + t.meta.episode_id + "' belongs to series '" + t.meta.series_id + "'");
      }
      for (const auto& [id, ivs] : intervals_by_celebrity(t, params)) {
        per_season[g][id] += total_duration(ivs);
        everyone.insert(id);
      }
    }
  }

  std::vector<Series> bars;
  Json seasons = Json::array();
  for (std::size_t g = 0; g < sorted.size(); ++g) {
    Series s{"season " + std::to_string(sorted[g].season), {}};
    for (const auto& id : everyone) {
      auto it = per_season[g].find(id);
      const std::int64_t ms = it == per_season[g].end() ? 0 : it->second;
      s.points.push_back({id, static_cast<double>(ms) / 60000.0});
    }
    bars.push_back(std::move(s));
    seasons.push_back(sorted[g].season);
  }

  ChartSpec c;
  c.chart_type = ChartType::seasonal_comparison;
  c.title = "Screen time by season";
  c.x_axis = {"celebrity", "category"};
  c.series = std::move(bars);
  c.meta = {{"series_id", series_id}, {"seasons", seasons}, {"coalesce", coalesce_echo(params)}, {"unit", "minutes"}};
  return c;
}

ChartSpec segment_heatmap(const Timeline& timeline, std::int64_t segment_ms) {
  require_positive(segment_ms, "segment_ms");
  const std::int64_t n_segments = ceil_div(timeline.meta.duration_ms, segment_ms);
  const auto ids = celebrities(timeline);
  MatrixSpec m;
  m.row_labels = ids;
  for (std::int64_t s = 0; s < n_segments; ++s) m.col_labels.push_back(format_clock(s * segment_ms));
  m.cells.assign(ids.size(), std::vector<double>(static_cast<std::size_t>(n_segments), 0.0));
  for (const auto& r : timeline.records) {
    // the closing instant t == duration_ms belongs to the last segment
    const std::int64_t seg = std::min(r.t_ms / segment_ms, n_segments - 1);
    const auto row = std::lower_bound(ids.begin(), ids.end(), r.celebrity_id) - ids.begin();
    m.cells[static_cast<std::size_t>(row)][static_cast<std::size_t>(seg)] += 1.0;
  }

  ChartSpec c;
  c.chart_type = ChartType::segment_heatmap;
  c.title = "Appearances by segment";
  c.x_axis = {"segment", "segment"};
  c.matrix = std::move(m);
  c.meta = episode_echo(timeline);
  c.meta["segment_ms"] = segment_ms;
  c.meta["n_segments"] = n_segments;
  c.meta["count_semantics"] = "detections";
  return c;
}

ChartSpec episode_chart(ChartType type, const Timeline& timeline, const WindowParams& window,
                        const CoalesceParams& coalesce) {
  switch (type) {
    case ChartType::per_minute_bars: return per_minute_counts(timeline, window.bucket_ms).chart;
    case ChartType::total_counts: return total_counts(timeline);
    case ChartType::total_durations: return total_durations(timeline, coalesce);
    case ChartType::trend_lines: return trend_lines(timeline, window.bucket_ms);
    case ChartType::distribution_pie: return distribution_pie(timeline);
    case ChartType::coappearance_matrix: return coappearance_matrix(timeline, window.coappearance_window_ms);
    case ChartType::coappearance_network:
      return coappearance_network(timeline, window.coappearance_window_ms, window.min_edge_weight);
    case ChartType::stacked_area: return stacked_area(timeline, window.bucket_ms, coalesce);
    case ChartType::segment_heatmap: return segment_heatmap(timeline, window.segment_ms);
    case ChartType::seasonal_comparison: break;
  }
  fail(ErrorCode::InvalidArgument, "seasonal_comparison is series-scoped");
}

}  // namespace screenline
