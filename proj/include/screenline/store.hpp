#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "screenline/aggregation.hpp"
#include "screenline/analytics.hpp"

namespace screenline {

struct TimeRange {
  std::int64_t from_ms = 0;
  std::int64_t to_ms = 0;
};

/// Conjunction of optional clauses; an empty celebrity set matches anyone.
struct QueryFilter {
  std::optional<std::string> episode_id;
  std::optional<std::string> series_id;
  std::optional<int> season;
  std::set<std::string> celebrities;
  std::optional<TimeRange> range;

  bool matches(const EpisodeMeta& meta) const;
  bool matches(const AppearanceRecord& record) const;
};

enum class Statistic { count, duration, first_seen, last_seen };
enum class GroupBy { celebrity, episode, season };

std::string to_string(Statistic s);
std::string to_string(GroupBy g);
Statistic statistic_from_string(const std::string& s);
GroupBy group_by_from_string(const std::string& s);

struct AggregateRequest {
  Statistic statistic = Statistic::count;
  GroupBy group_by = GroupBy::celebrity;
  QueryFilter filter;
  std::optional<CoalesceParams> coalesce;
};

struct AggregateRow {
  std::string key;
  std::int64_t value = 0;

  bool operator==(const AggregateRow&) const = default;
};

/// Unordered celebrity pair (first < second) -> co-appearance count.
using PairCounts = std::map<std::pair<std::string, std::string>, std::int64_t>;

struct StoreOptions {
  std::size_t max_records = std::numeric_limits<std::size_t>::max();
};

/// Embedded single-node store.
///
/// Layout under the data directory:
///   catalog.log      append-only log of register / put / mark entries
///   segments/N.seg   one immutable snapshot per stored timeline version
/// Both carry the "SLDB" magic and a CRC32C per entry or file. A put writes
/// its segment first and commits by appending the log entry, so a failure at
/// any point leaves the previous episode version visible.
///
/// Readers never block on writer I/O; the in-memory swap is the only section
/// that takes the exclusive lock.
class Store {
 public:
  explicit Store(std::string dir, StoreOptions options = {});
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  const std::string& dir() const { return dir_; }

  /// Adds or updates an episode's metadata. An already processed episode
  /// keeps its flag and records.
  void register_episode(const EpisodeMeta& meta);

  /// Stores (or atomically replaces) an episode's timeline and marks it
  /// processed. Returns the stored record count.
  std::size_t put_timeline(const Timeline& timeline);

  std::vector<AppearanceRecord> query_appearances(const QueryFilter& filter) const;
  PairCounts query_cooccurrence(const QueryFilter& filter, std::int64_t window_ms) const;
  std::vector<AggregateRow> aggregate(const AggregateRequest& request) const;

  std::vector<EpisodeMeta> list_unprocessed() const;
  void mark_processed(const std::string& episode_id);

  std::optional<EpisodeMeta> episode(const std::string& episode_id) const;
  std::vector<EpisodeMeta> episodes() const;
  /// Stored timeline; UnknownEpisode if unregistered, NotProcessed if no
  /// timeline has been stored yet.
  std::shared_ptr<const Timeline> timeline(const std::string& episode_id) const;
  std::size_t record_count() const;

 private:
  struct Indexed {
    Timeline timeline;
    // celebrity -> record positions, ascending (hence time ordered)
    std::map<std::string, std::vector<std::size_t>> by_celebrity;
  };
  struct Entry {
    EpisodeMeta meta;
    std::shared_ptr<const Indexed> data;
    std::string segment;
  };

  void open();
  void replay(const Json& op);
  void append_log(const Json& op);
  void compact_log();
  std::shared_ptr<const Indexed> load_segment(const std::string& name, const EpisodeMeta& meta) const;
  std::string write_segment(const Timeline& timeline);
  static std::shared_ptr<const Indexed> index_timeline(Timeline timeline);

  template <typename Fn>
  void for_each_match(const QueryFilter& filter, Fn&& fn) const;

  std::string dir_;
  StoreOptions options_;
  mutable std::shared_mutex mutex_;
  std::mutex writer_;
  std::map<std::string, Entry> episodes_;
  std::size_t total_records_ = 0;
  std::uint64_t next_segment_ = 0;
  std::size_t log_entries_ = 0;
};

}  // namespace screenline
