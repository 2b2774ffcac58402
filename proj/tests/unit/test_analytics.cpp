#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "screenline/analytics.hpp"
#include "screenline/workflow.hpp"
#include "test_support.hpp"

using namespace screenline;
using screenline::testing::meta;
using screenline::testing::random_timeline;
using screenline::testing::rec;

namespace {

// Three celebrities over a 10 minute episode; small enough to read the
// golden files by eye.
Timeline golden_timeline(const std::string& id = "golden", int season = 1, std::int64_t shift = 0) {
  std::vector<AppearanceRecord> v;
  std::uint64_t pos = 0;
  auto add = [&](const std::string& c, std::int64_t t) { v.push_back(rec(id, c, t + shift, pos++, 0.875)); };
  for (std::int64_t t = 0; t < 4000; t += 500) add("alice", t);
  for (std::int64_t t = 1000; t < 3000; t += 500) add("bob", t);
  for (std::int64_t t = 65000; t < 66500; t += 500) add("alice", t);
  for (std::int64_t t = 65000; t < 70000; t += 1000) add("carol", t);
  add("bob", 250000);
  add("carol", 400000);
  add("alice", 599500);
  return make_timeline(meta(id, 600000, "golden-series", season, 1), v);
}

ChartSpec golden_chart(ChartType type) {
  WindowParams w;
  w.bucket_ms = 60000;
  w.segment_ms = 120000;
  w.coappearance_window_ms = 1000;
  w.min_edge_weight = 1;
  const CoalesceParams c{2000, 500};
  if (type == ChartType::seasonal_comparison) {
    const Timeline s1 = golden_timeline("g1", 1);
    const Timeline s2 = golden_timeline("g2", 2, 100);
    const Timeline s2b = golden_timeline("g3", 2, 200);
    return seasonal_comparison({{"golden-series", 2, {std::cref(s2), std::cref(s2b)}},
                                {"golden-series", 1, {std::cref(s1)}}},
                               c);
  }
  return episode_chart(type, golden_timeline(), w, c);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::map<std::string, double> series_sums(const ChartSpec& c) {
  std::map<std::string, double> out;
  for (const auto& s : *c.series) {
    for (const auto& p : s.points) out[s.name] += p.y;
  }
  return out;
}

// O(n^2) reference: each (window, a, b) triple with a != b present counts once.
std::map<std::pair<std::string, std::string>, std::int64_t> co_oracle(const Timeline& t, std::int64_t window) {
  std::set<std::tuple<std::int64_t, std::string, std::string>> seen;
  const auto& r = t.records;
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      const std::int64_t ki = window > 0 ? r[i].t_ms / window : r[i].t_ms;
      const std::int64_t kj = window > 0 ? r[j].t_ms / window : r[j].t_ms;
      if (ki == kj && r[i].celebrity_id < r[j].celebrity_id) seen.insert({ki, r[i].celebrity_id, r[j].celebrity_id});
    }
  }
  std::map<std::pair<std::string, std::string>, std::int64_t> out;
  for (const auto& [k, a, b] : seen) ++out[{a, b}];
  return out;
}

}  // namespace

TEST(ChartGolden, AllTypesMatchFixtures) {
  const bool update = std::getenv("SCREENLINE_UPDATE_GOLDEN") != nullptr;
  ASSERT_EQ(all_chart_types().size(), 10u);
  for (ChartType type : all_chart_types()) {
    const std::string path = std::string(SCREENLINE_FIXTURES) + "/charts/" + to_string(type) + ".json";
    const std::string payload = chart_payload(golden_chart(type));
    if (update) {
      std::ofstream(path, std::ios::binary) << payload;
      continue;
    }
    EXPECT_EQ(payload, read_file(path)) << to_string(type);
    const auto parsed = ChartSpec::from_json(Json::parse(payload));
    EXPECT_EQ(chart_payload(parsed), payload) << to_string(type);
  }
}

TEST(ChartSpec, ExactlyOneBody) {
  for (ChartType type : all_chart_types()) {
    const Json j = golden_chart(type).to_json();
    EXPECT_EQ(j["schema"], kChartSchemaVersion);
    EXPECT_EQ(j.contains("series") + j.contains("matrix") + j.contains("graph"), 1) << to_string(type);
    EXPECT_EQ(chart_type_from_string(j["chart_type"].get<std::string>()), type);
  }
  EXPECT_FALSE(chart_type_from_string("bogus"));
}

TEST(Analytics, ElevenSegmentsForDefaultLength) {
  const Timeline t = make_timeline(meta("e", 3300000), {rec("e", "a", 0, 0), rec("e", "a", 3300000, 1)});
  const auto c = segment_heatmap(t, 300000);
  EXPECT_EQ(c.matrix->col_labels.size(), 11u);
  EXPECT_EQ(c.matrix->col_labels[10], "00:50:00");
  EXPECT_EQ(c.matrix->cells[0][10], 1.0);
}

TEST(Analytics, ConservationOnRandomTimelines) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t = random_timeline(seed, 400, 5, 1800000);
    const auto totals = count_by_celebrity(t);
    const auto bars = series_sums(per_minute_counts(t, 60000).chart);
    const auto trend = series_sums(trend_lines(t, 45000));
    const auto heat = segment_heatmap(t, 300000);
    const auto tc = total_counts(t);
    for (const auto& p : tc.series->front().points) {
      const auto id = std::get<std::string>(p.x);
      EXPECT_EQ(p.y, totals.at(id));
      EXPECT_EQ(bars.at(id), totals.at(id));
      EXPECT_EQ(trend.at(id), totals.at(id));
    }
    for (std::size_t r = 0; r < heat.matrix->row_labels.size(); ++r) {
      double sum = 0;
      for (double v : heat.matrix->cells[r]) sum += v;
      EXPECT_EQ(sum, totals.at(heat.matrix->row_labels[r]));
    }
    double share = 0;
    const ChartSpec pie = distribution_pie(t);
  for (const auto& p : pie.series->front().points) share += p.y;
    EXPECT_NEAR(share, 1.0, 1e-9);

    const CoalesceParams params{2000, 500};
    const auto durations = total_durations(t, params);
    const auto area = stacked_area(t, 60000, params);
    std::map<std::string, double> integral;
    for (const auto& s : *area.series) {
      for (const auto& p : s.points) integral[s.name] += p.y * 60000.0;
    }
    for (const auto& p : durations.series->front().points) {
      EXPECT_NEAR(integral.at(std::get<std::string>(p.x)), p.y, 1.0);
    }
  }
}

TEST(Analytics, CoappearanceMatchesOracle) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = random_timeline(seed, 500, 6, 120000);
    for (std::int64_t window : {0, 1000, 5000}) {
      const auto m = coappearance_counts(t, window);
      const auto want = co_oracle(t, window);
      for (std::size_t i = 0; i < m.labels.size(); ++i) {
        EXPECT_EQ(m.cells[i][i], 0);
        for (std::size_t j = 0; j < m.labels.size(); ++j) {
          EXPECT_EQ(m.cells[i][j], m.cells[j][i]);
          if (i < j) {
            auto it = want.find({m.labels[i], m.labels[j]});
            EXPECT_EQ(m.cells[i][j], it == want.end() ? 0 : it->second);
          }
        }
      }
    }
  }
}

TEST(Analytics, NetworkValidatesMatrix) {
  CoMatrix m{{"a", "b"}, {{0, 2}, {1, 0}}};
  try {
    coappearance_network(m, {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AsymmetricInput);
  }
  m.cells = {{1, 0}, {0, 0}};
  EXPECT_THROW(coappearance_network(m, {}, 1), Error);
  m.cells = {{0, 3}, {3, 0}};
  const auto g = coappearance_network(m, {{"a", 5}}, 4);
  EXPECT_TRUE(g.graph->edges.empty());
  EXPECT_EQ(g.graph->nodes.size(), 2u);
  EXPECT_EQ(coappearance_network(m, {}, 3).graph->edges.size(), 1u);
}

TEST(Analytics, EmptyTimelines) {
  const Timeline t = make_timeline(meta("e", 60000), {});
  try {
    distribution_pie(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyTimeline);
  }
  EXPECT_EQ(bucket_counts(t, 60000).n_buckets, 0u);
  EXPECT_TRUE(total_counts(t).series->front().points.empty());
  EXPECT_EQ(segment_heatmap(t, 30000).matrix->col_labels.size(), 2u);
}

TEST(Analytics, BadParameters) {
  const auto t = golden_timeline();
  EXPECT_THROW(bucket_counts(t, 0), Error);
  EXPECT_THROW(segment_heatmap(t, -5), Error);
  EXPECT_THROW(coappearance_counts(t, -1), Error);
  EXPECT_THROW(seasonal_comparison({}, {}), Error);
}

TEST(Analytics, SeasonalRejectsMixedSeries) {
  const Timeline a = golden_timeline("a");
  Timeline b = golden_timeline("b");
  b.meta.series_id = "other";
  try {
    seasonal_comparison({{"golden-series", 1, {std::cref(a), std::cref(b)}}}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MixedSeries);
  }
}

TEST(Analytics, RankingIsValueThenId) {
  const Timeline t = make_timeline(meta("e", 10000), {rec("e", "b", 0, 0), rec("e", "a", 1, 1), rec("e", "c", 2, 2),
                                                      rec("e", "c", 3, 3)});
  const auto pts = total_counts(t).series->front().points;
  EXPECT_EQ(std::get<std::string>(pts[0].x), "c");
  EXPECT_EQ(std::get<std::string>(pts[1].x), "a");
  EXPECT_EQ(std::get<std::string>(pts[2].x), "b");
}

TEST(Analytics, FormatClock) {
  EXPECT_EQ(format_clock(0), "00:00:00");
  EXPECT_EQ(format_clock(3300000), "00:55:00");
  EXPECT_EQ(format_clock(3723000), "01:02:03");
}
