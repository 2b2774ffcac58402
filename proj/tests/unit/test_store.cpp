#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "screenline/store.hpp"
#include "test_support.hpp"

using namespace screenline;
using screenline::testing::meta;
using screenline::testing::random_timeline;
using screenline::testing::rec;
using screenline::testing::TempDir;

namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidArgument;
}

Timeline episode(const std::string& id, std::uint64_t seed, const std::string& series, int season) {
  Timeline t = random_timeline(seed, 150, 4, 300000, id);
  t.meta.series_id = series;
  t.meta.season = season;
  return t;
}

std::vector<Timeline> corpus() {
  return {episode("a1", 1, "alpha", 1), episode("a2", 2, "alpha", 1), episode("a3", 3, "alpha", 2),
          episode("b1", 4, "beta", 1)};
}

// Linear-scan reference over the raw timelines.
std::vector<AppearanceRecord> scan(const std::vector<Timeline>& all, const QueryFilter& f) {
  std::vector<const Timeline*> sorted;
  for (const auto& t : all) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->meta.episode_id < b->meta.episode_id; });
  std::vector<AppearanceRecord> out;
  for (const auto* t : sorted) {
    if (f.episode_id && t->meta.episode_id != *f.episode_id) continue;
    if (f.series_id && t->meta.series_id != *f.series_id) continue;
    if (f.season && t->meta.season != *f.season) continue;
    for (const auto& r : t->records) {
      if (!f.celebrities.empty() && !f.celebrities.contains(r.celebrity_id)) continue;
      if (f.range && (r.t_ms < f.range->from_ms || r.t_ms >= f.range->to_ms)) continue;
      out.push_back(r);
    }
  }
  return out;
}

void fill(Store& s, const std::vector<Timeline>& all) {
  for (const auto& t : all) {
    s.register_episode(t.meta);
    s.put_timeline(t);
  }
}

}  // namespace

TEST(Store, QueryMatchesLinearScan) {
  TempDir dir("store-q");
  Store store(dir.str());
  const auto all = corpus();
  fill(store, all);
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    QueryFilter f;
    if (rng.below(3) == 0) f.episode_id = all[rng.below(all.size())].meta.episode_id;
    if (rng.below(3) == 0) f.series_id = rng.below(2) ? "alpha" : "beta";
    if (rng.below(3) == 0) f.season = 1 + static_cast<int>(rng.below(2));
    for (int c = 0; c < 4; ++c) {
      if (rng.below(3) == 0) f.celebrities.insert("c" + std::to_string(c));
    }
    if (rng.below(2) == 0) {
      const auto a = static_cast<std::int64_t>(rng.below(300000));
      f.range = TimeRange{a, a + 1 + static_cast<std::int64_t>(rng.below(100000))};
    }
    ASSERT_EQ(store.query_appearances(f), scan(all, f)) << "filter " << i;
  }
}

TEST(Store, AggregateMatchesScan) {
  TempDir dir("store-agg");
  Store store(dir.str());
  const auto all = corpus();
  fill(store, all);
  QueryFilter f;
  f.series_id = "alpha";
  const auto rows = store.aggregate({Statistic::count, GroupBy::celebrity, f, {}});
  std::map<std::string, std::int64_t> want;
  std::map<std::string, std::int64_t> first, last, per_season;
  for (const auto& r : scan(all, f)) {
    ++want[r.celebrity_id];
    if (!first.contains(r.celebrity_id) || r.t_ms < first[r.celebrity_id]) first[r.celebrity_id] = r.t_ms;
    last[r.celebrity_id] = std::max(last[r.celebrity_id], r.t_ms);
  }
  ASSERT_EQ(rows.size(), want.size());
  for (const auto& row : rows) EXPECT_EQ(row.value, want.at(row.key));
  for (const auto& row : store.aggregate({Statistic::first_seen, GroupBy::celebrity, f, {}})) {
    EXPECT_EQ(row.value, first.at(row.key));
  }
  for (const auto& row : store.aggregate({Statistic::last_seen, GroupBy::celebrity, f, {}})) {
    EXPECT_EQ(row.value, last.at(row.key));
  }
  const auto seasons = store.aggregate({Statistic::count, GroupBy::season, {}, {}});
  ASSERT_EQ(seasons.size(), 3u);
  EXPECT_EQ(seasons[0].key, "alpha:1");
  EXPECT_EQ(seasons[0].value, 300);

  // duration per episode equals the sum of per-celebrity coalesced durations
  const CoalesceParams p{2000, 500};
  for (const auto& row : store.aggregate({Statistic::duration, GroupBy::episode, {}, p})) {
    const auto t = store.timeline(row.key);
    std::int64_t sum = 0;
    for (const auto& id : celebrities(*t)) sum += total_duration(coalesce_intervals(*t, id, p));
    EXPECT_EQ(row.value, sum);
  }
  EXPECT_EQ(code_of([&] { store.aggregate({Statistic::duration, GroupBy::episode, {}, std::nullopt}); }),
            ErrorCode::MissingCoalesceParams);
}

TEST(Store, CooccurrenceMatchesAnalytics) {
  TempDir dir("store-co");
  Store store(dir.str());
  const auto all = corpus();
  fill(store, all);
  QueryFilter f;
  f.episode_id = "a2";
  const auto pairs = store.query_cooccurrence(f, 1000);
  const auto m = coappearance_counts(all[1], 1000);
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    for (std::size_t j = i + 1; j < m.labels.size(); ++j) {
      auto it = pairs.find({m.labels[i], m.labels[j]});
      EXPECT_EQ(it == pairs.end() ? 0 : it->second, m.cells[i][j]);
    }
  }
}

TEST(Store, ReopenGivesIdenticalAnswers) {
  TempDir dir("store-reopen");
  const auto all = corpus();
  std::vector<AppearanceRecord> before;
  {
    Store store(dir.str());
    fill(store, all);
    store.put_timeline(all[0]);
    store.register_episode(meta("todo", 5000));
    before = store.query_appearances({});
  }
  Store store(dir.str());
  EXPECT_EQ(store.query_appearances({}), before);
  EXPECT_EQ(store.record_count(), before.size());
  ASSERT_EQ(store.list_unprocessed().size(), 1u);
  EXPECT_EQ(store.list_unprocessed()[0].episode_id, "todo");
  EXPECT_TRUE(store.episode("a1")->processed);
}

TEST(Store, PutTwiceReplaces) {
  TempDir dir("store-put");
  Store store(dir.str());
  const auto t = episode("x", 9, "s", 1);
  store.put_timeline(t);
  store.put_timeline(t);
  EXPECT_EQ(store.record_count(), t.records.size());
  Timeline smaller = t;
  smaller.records.resize(10);
  store.put_timeline(smaller);
  EXPECT_EQ(store.timeline("x")->records.size(), 10u);
  std::size_t segments = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path() / "segments")) ++segments;
  EXPECT_EQ(segments, 1u);
}

TEST(Store, ErrorsAndStates) {
  TempDir dir("store-err");
  Store store(dir.str(), StoreOptions{100});
  EXPECT_EQ(code_of([&] { store.timeline("nope"); }), ErrorCode::UnknownEpisode);
  store.register_episode(meta("e", 10000));
  EXPECT_EQ(code_of([&] { store.timeline("e"); }), ErrorCode::NotProcessed);
  QueryFilter f;
  f.episode_id = "ghost";
  EXPECT_EQ(code_of([&] { store.query_appearances(f); }), ErrorCode::UnknownEpisode);
  f.episode_id.reset();
  f.range = TimeRange{10, 10};
  EXPECT_EQ(code_of([&] { store.query_appearances(f); }), ErrorCode::InvalidArgument);

  std::vector<AppearanceRecord> many;
  for (int i = 0; i < 101; ++i) many.push_back(rec("e", "a", i, i));
  EXPECT_EQ(code_of([&] { store.put_timeline(make_timeline(meta("e", 10000), many)); }), ErrorCode::StorageFull);
  EXPECT_EQ(code_of([&] { store.timeline("e"); }), ErrorCode::NotProcessed);

  store.mark_processed("e");
  store.mark_processed("e");
  EXPECT_TRUE(store.episode("e")->processed);
  EXPECT_TRUE(store.list_unprocessed().empty());
  EXPECT_EQ(code_of([&] { store.mark_processed("zzz"); }), ErrorCode::UnknownEpisode);
}

TEST(Store, RegisterKeepsProcessedFlag) {
  TempDir dir("store-reg");
  Store store(dir.str());
  const auto t = episode("x", 9, "s", 1);
  store.put_timeline(t);
  auto m = t.meta;
  m.processed = false;
  m.series_id = "renamed";
  store.register_episode(m);
  EXPECT_TRUE(store.episode("x")->processed);
  EXPECT_EQ(store.episode("x")->series_id, "renamed");
  EXPECT_EQ(store.timeline("x")->records.size(), t.records.size());
}

TEST(Store, TornLogTailIsDropped) {
  TempDir dir("store-torn");
  const auto t = episode("x", 9, "s", 1);
  {
    Store store(dir.str());
    store.put_timeline(t);
  }
  const auto log = dir.path() / "catalog.log";
  const auto size = fs::file_size(log);
  {
    std::ofstream f(log, std::ios::binary | std::ios::app);
    const char partial[] = {40, 0, 0, 0, 1, 2, 3, 4, '{', '"'};
    f.write(partial, sizeof(partial));
  }
  Store store(dir.str());
  EXPECT_EQ(store.timeline("x")->records, t.records);
  EXPECT_EQ(fs::file_size(log), size);
}

TEST(Store, OrphanSegmentsAreRemoved) {
  TempDir dir("store-orphan");
  {
    Store store(dir.str());
    store.put_timeline(episode("x", 9, "s", 1));
  }
  std::ofstream(dir.path() / "segments" / "000000000099.seg") << "half-written";
  Store store(dir.str());
  EXPECT_FALSE(fs::exists(dir.path() / "segments" / "000000000099.seg"));
  EXPECT_EQ(store.episodes().size(), 1u);
}

TEST(Store, CorruptSegmentIsReported) {
  TempDir dir("store-corrupt");
  {
    Store store(dir.str());
    store.put_timeline(episode("x", 9, "s", 1));
  }
  fs::path seg;
  for (const auto& e : fs::directory_iterator(dir.path() / "segments")) seg = e.path();
  {
    std::fstream f(seg, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(60);
    f.put('#');
  }
  EXPECT_EQ(code_of([&] { Store reopened(dir.str()); }), ErrorCode::CorruptSegment);
}

TEST(Store, LogCompactionKeepsState) {
  TempDir dir("store-compact");
  const auto t = episode("x", 9, "s", 1);
  {
    Store store(dir.str());
    for (int i = 0; i < 80; ++i) store.register_episode(meta("e" + std::to_string(i % 3), 1000));
    store.put_timeline(t);
  }
  const auto before = fs::file_size(dir.path() / "catalog.log");
  {
    Store store(dir.str());
    EXPECT_EQ(store.episodes().size(), 4u);
  }
  EXPECT_LT(fs::file_size(dir.path() / "catalog.log"), before);
  Store store(dir.str());
  EXPECT_EQ(store.timeline("x")->records, t.records);
  EXPECT_EQ(store.list_unprocessed().size(), 3u);
}

TEST(Store, ReadersSeeWholeVersions) {
  TempDir dir("store-mt");
  Store store(dir.str());
  const auto a = episode("x", 1, "s", 1);
  auto b = a;
  b.records.resize(20);
  store.put_timeline(a);
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    QueryFilter f;
    f.episode_id = "x";
    while (!done) {
      const auto n = store.query_appearances(f).size();
      if (n != a.records.size() && n != b.records.size()) ++bad;
    }
  });
  for (int i = 0; i < 20; ++i) store.put_timeline(i % 2 ? a : b);
  done = true;
  reader.join();
  EXPECT_EQ(bad, 0);
}

TEST(Store, StatisticNames) {
  for (auto s : {Statistic::count, Statistic::duration, Statistic::first_seen, Statistic::last_seen}) {
    EXPECT_EQ(statistic_from_string(to_string(s)), s);
  }
  for (auto g : {GroupBy::celebrity, GroupBy::episode, GroupBy::season}) EXPECT_EQ(group_by_from_string(to_string(g)), g);
  EXPECT_THROW(statistic_from_string("median"), Error);
}
