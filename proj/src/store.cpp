#include "screenline/store.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "screenline/binary_io.hpp"
#include "screenline/error.hpp"

namespace screenline {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[4] = {'S', 'L', 'D', 'B'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint8_t kKindLog = 1;
constexpr std::uint8_t kKindSegment = 2;
constexpr std::size_t kHeaderSize = 12;

void write_header(ByteWriter& w, std::uint8_t kind) {
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.u8(kind);
  w.u8(0);
  w.u8(0);
  w.u8(0);
}

void check_header(ByteReader& r, std::uint8_t kind, ErrorCode corrupt, const std::string& what) {
  if (r.remaining() < kHeaderSize) fail(corrupt, what + " is shorter than its header");
  auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) fail(ErrorCode::BadMagic, what + " lacks the SLDB magic");
  const std::uint32_t version = r.u32();
  if (version != kVersion) fail(ErrorCode::VersionUnsupported, what + " has version " + std::to_string(version));
  if (r.u8() != kind) fail(corrupt, what + " has the wrong file kind");
  r.take(3);
}

std::vector<std::uint8_t> log_entry(const Json& op) {
  const std::string payload = op.dump();
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.u32(crc32c({reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()}));
  w.bytes(payload);
  return std::move(w.buffer());
}

void append_bytes(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::FILE* f = std::fopen(path.c_str(), "ab");
  if (!f) fail(ErrorCode::IoError, "cannot open " + path);
  const bool ok = std::fwrite(bytes.data(), 1, bytes.size(), f) == bytes.size() && std::fflush(f) == 0 &&
                  ::fsync(::fileno(f)) == 0;
  std::fclose(f);
  if (!ok) fail(ErrorCode::IoError, "append to " + path + " failed");
}

}  // namespace

bool QueryFilter::matches(const EpisodeMeta& meta) const {
  if (episode_id && meta.episode_id != *episode_id) return false;
  if (series_id && meta.series_id != *series_id) return false;
  if (season && meta.season != *season) return false;
  return true;
}

bool QueryFilter::matches(const AppearanceRecord& r) const {
  if (!celebrities.empty() && !celebrities.contains(r.celebrity_id)) return false;
  if (range && (r.t_ms < range->from_ms || r.t_ms >= range->to_ms)) return false;
  return true;
}

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::count: return "count";
    case Statistic::duration: return "duration";
    case Statistic::first_seen: return "first_seen";
    case Statistic::last_seen: return "last_seen";
  }
  return "count";
}

std::string to_string(GroupBy g) {
  switch (g) {
    case GroupBy::celebrity: return "celebrity";
    case GroupBy::episode: return "episode";
    case GroupBy::season: return "season";
  }
  return "celebrity";
}

Statistic statistic_from_string(const std::string& s) {
  for (auto v : {Statistic::count, Statistic::duration, Statistic::first_seen, Statistic::last_seen}) {
    if (to_string(v) == s) return v;
  }
  fail(ErrorCode::InvalidArgument, "unknown statistic '" + s + "'");
}

GroupBy group_by_from_string(const std::string& s) {
  for (auto v : {GroupBy::celebrity, GroupBy::episode, GroupBy::season}) {
    if (to_string(v) == s) return v;
  }
  fail(ErrorCode::InvalidArgument, "unknown group-by '" + s + "'");
}

Store::Store(std::string dir, StoreOptions options) : dir_(std::move(dir)), options_(options) { open(); }

void Store::open() {
  fs::create_directories(fs::path(dir_) / "segments");
  const std::string log_path = (fs::path(dir_) / "catalog.log").string();
  if (!fs::exists(log_path)) {
    ByteWriter w;
    write_header(w, kKindLog);
    write_file_atomic(log_path, w.buffer());
  }

  const auto bytes = read_file_bytes(log_path);
  ByteReader r(bytes);
  check_header(r, kKindLog, ErrorCode::CorruptFile, "catalog log");
  std::size_t good = r.offset();
  while (!r.at_end()) {
    // A torn or damaged tail entry is an interrupted append: drop it.
    if (r.remaining() < 8) break;
    const std::uint32_t len = r.u32();
    const std::uint32_t crc = r.u32();
    if (len > r.remaining()) break;
    auto payload = r.take(len);
    if (crc32c(payload) != crc) break;
    Json op;
    try {
      op = Json::parse(payload.begin(), payload.end());
    } catch (const Json::exception&) {
      break;
    }
    replay(op);
    ++log_entries_;
    good = r.offset();
  }
  if (good != bytes.size()) fs::resize_file(log_path, good);

  std::set<std::string> referenced;
  for (auto& [id, entry] : episodes_) {
    if (entry.segment.empty()) continue;
    entry.data = load_segment(entry.segment, entry.meta);
    total_records_ += entry.data->timeline.records.size();
    referenced.insert(entry.segment);
  }
  for (const auto& file : fs::directory_iterator(fs::path(dir_) / "segments")) {
    if (!referenced.contains(file.path().filename().string())) fs::remove(file.path());
  }
  if (log_entries_ > 4 * episodes_.size() + 64) compact_log();
}

void Store::replay(const Json& op) {
  const std::string kind = op.value("op", std::string());
  if (kind == "register") {
    EpisodeMeta meta = meta_from_json(op.at("meta"));
    auto it = episodes_.find(meta.episode_id);
    if (it == episodes_.end()) {
      episodes_[meta.episode_id] = Entry{meta, nullptr, {}};
    } else {
      meta.processed = it->second.meta.processed || meta.processed;
      it->second.meta = meta;
    }
  } else if (kind == "put") {
    EpisodeMeta meta = meta_from_json(op.at("meta"));
    const std::string segment = op.at("segment").get<std::string>();
    Entry& e = episodes_[meta.episode_id];
    e.meta = meta;
    e.segment = segment;
    next_segment_ = std::max<std::uint64_t>(next_segment_, std::stoull(segment) + 1);
  } else if (kind == "mark") {
    auto it = episodes_.find(op.at("episode_id").get<std::string>());
    if (it != episodes_.end()) it->second.meta.processed = true;
  } else {
    fail(ErrorCode::CorruptFile, "unknown catalog entry '" + kind + "'");
  }
}

void Store::append_log(const Json& op) {
  append_bytes((fs::path(dir_) / "catalog.log").string(), log_entry(op));
  ++log_entries_;
}

void Store::compact_log() {
  ByteWriter w;
  write_header(w, kKindLog);
  std::size_t entries = 0;
  for (const auto& [id, e] : episodes_) {
    std::vector<std::uint8_t> bytes;
    if (!e.segment.empty()) {
      bytes = log_entry({{"op", "put"},
                         {"meta", to_json(e.meta)},
                         {"segment", e.segment},
                         {"count", e.data ? e.data->timeline.records.size() : 0}});
    } else {
      EpisodeMeta meta = e.meta;
      bytes = log_entry({{"op", "register"}, {"meta", to_json(meta)}});
    }
    w.bytes(bytes);
    ++entries;
  }
  write_file_atomic((fs::path(dir_) / "catalog.log").string(), w.buffer());
  log_entries_ = entries;
}

std::string Store::write_segment(const Timeline& timeline) {
  std::ostringstream body;
  write_jsonl(body, timeline.records);
  const std::string payload = body.str();
  const std::string meta = to_json(timeline.meta).dump();

  ByteWriter w;
  write_header(w, kKindSegment);
  w.u64(timeline.records.size());
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.bytes(meta);
  w.u64(payload.size());
  w.bytes(payload);
  w.u32(crc32c(w.buffer()));

  char name[32];
  std::snprintf(name, sizeof(name), "%012llu.seg", static_cast<unsigned long long>(next_segment_++));
  write_file_atomic((fs::path(dir_) / "segments" / name).string(), w.buffer());
  return name;
}

std::shared_ptr<const Store::Indexed> Store::load_segment(const std::string& name, const EpisodeMeta& meta) const {
  const std::string path = (fs::path(dir_) / "segments" / name).string();
  if (!fs::exists(path)) fail(ErrorCode::CorruptSegment, "missing segment " + name);
  const auto bytes = read_file_bytes(path);
  try {
    ByteReader r(bytes);
    check_header(r, kKindSegment, ErrorCode::CorruptSegment, "segment " + name);
    const std::uint64_t count = r.u64();
    r.take(r.u32());
    const std::uint64_t len = r.u64();
    if (len > r.remaining()) fail(ErrorCode::CorruptSegment, "segment " + name + " is truncated");
    auto payload = r.take(static_cast<std::size_t>(len));
    const std::size_t crc_offset = r.offset();
    const std::uint32_t crc = r.u32();
    if (crc32c(std::span<const std::uint8_t>(bytes).first(crc_offset)) != crc || !r.at_end()) {
      fail(ErrorCode::CorruptSegment, "segment " + name + " fails its checksum");
    }
    auto records = parse_jsonl(std::string(payload.begin(), payload.end()));
    if (records.size() != count) fail(ErrorCode::CorruptSegment, "segment " + name + " record count mismatch");
    return index_timeline(Timeline{meta, std::move(records)});
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptSegment) throw;
    fail(ErrorCode::CorruptSegment, "segment " + name + ": " + e.what());
  }
}

std::shared_ptr<const Store::Indexed> Store::index_timeline(Timeline timeline) {
  auto indexed = std::make_shared<Indexed>();
  indexed->timeline = std::move(timeline);
  const auto& records = indexed->timeline.records;
  for (std::size_t i = 0; i < records.size(); ++i) indexed->by_celebrity[records[i].celebrity_id].push_back(i);
  return indexed;
}

void Store::register_episode(const EpisodeMeta& meta) {
  if (meta.episode_id.empty()) fail(ErrorCode::InvalidArgument, "episode_id must not be empty");
  if (meta.duration_ms < 0) fail(ErrorCode::InvalidArgument, "duration_ms must be non-negative");
  std::lock_guard writer(writer_);
  EpisodeMeta stored = meta;
  {
    std::shared_lock read(mutex_);
    auto it = episodes_.find(meta.episode_id);
    if (it != episodes_.end()) stored.processed = it->second.meta.processed;
    else stored.processed = false;
  }
  append_log({{"op", "register"}, {"meta", to_json(stored)}});
  std::unique_lock write(mutex_);
  auto it = episodes_.find(meta.episode_id);
  if (it == episodes_.end()) {
    episodes_[meta.episode_id] = Entry{stored, nullptr, {}};
  } else {
    it->second.meta = stored;
  }
}

std::size_t Store::put_timeline(const Timeline& input) {
  Timeline timeline = make_timeline(input.meta, input.records);
  if (timeline.meta.duration_ms < 1) fail(ErrorCode::InvalidArgument, "stored episodes need a positive duration");

  std::lock_guard writer(writer_);
  std::string old_segment;
  std::size_t old_count = 0;
  {
    std::shared_lock read(mutex_);
    auto it = episodes_.find(timeline.meta.episode_id);
    if (it != episodes_.end()) {
      old_segment = it->second.segment;
      old_count = it->second.data ? it->second.data->timeline.records.size() : 0;
      if (timeline.meta.source.empty()) timeline.meta.source = it->second.meta.source;
    }
  }
  if (total_records_ - old_count + timeline.records.size() > options_.max_records) {
    fail(ErrorCode::StorageFull, "store capacity of " + std::to_string(options_.max_records) + " records exceeded");
  }
  timeline.meta.processed = true;

  const std::string segment = write_segment(timeline);
  try {
    append_log({{"op", "put"},
                {"meta", to_json(timeline.meta)},
                {"segment", segment},
                {"count", timeline.records.size()}});
  } catch (...) {
    fs::remove(fs::path(dir_) / "segments" / segment);
    throw;
  }

  const std::size_t count = timeline.records.size();
  const EpisodeMeta meta = timeline.meta;
  auto indexed = index_timeline(std::move(timeline));
  {
    std::unique_lock write(mutex_);
    episodes_[meta.episode_id] = Entry{meta, std::move(indexed), segment};
    total_records_ = total_records_ - old_count + count;
  }
  if (!old_segment.empty() && old_segment != segment) {
    std::error_code ec;
    fs::remove(fs::path(dir_) / "segments" / old_segment, ec);
  }
  return count;
}

template <typename Fn>
void Store::for_each_match(const QueryFilter& filter, Fn&& fn) const {
  if (filter.range && filter.range->from_ms >= filter.range->to_ms) {
    fail(ErrorCode::InvalidArgument, "time range needs from_ms < to_ms");
  }
  std::vector<std::shared_ptr<const Indexed>> snapshot;
  {
    std::shared_lock read(mutex_);
    if (filter.episode_id && !episodes_.contains(*filter.episode_id)) {
      fail(ErrorCode::UnknownEpisode, "unknown episode '" + *filter.episode_id + "'");
    }
    for (const auto& [id, e] : episodes_) {
      if (e.data && filter.matches(e.meta)) snapshot.push_back(e.data);
    }
  }

  for (const auto& ep : snapshot) {
    const auto& records = ep->timeline.records;
    auto by_time = [&](std::size_t i, std::int64_t t) { return records[i].t_ms < t; };
    std::vector<std::size_t> hits;
    auto take = [&](const std::vector<std::size_t>& positions) {
      auto lo = positions.begin();
      auto hi = positions.end();
      if (filter.range) {
        lo = std::lower_bound(positions.begin(), positions.end(), filter.range->from_ms, by_time);
        hi = std::lower_bound(lo, positions.end(), filter.range->to_ms, by_time);
      }
      hits.insert(hits.end(), lo, hi);
    };
    if (!filter.celebrities.empty()) {
      for (const auto& celeb : filter.celebrities) {
        auto it = ep->by_celebrity.find(celeb);
        if (it != ep->by_celebrity.end()) take(it->second);
      }
      std::sort(hits.begin(), hits.end());
    } else {
      auto lo = records.begin();
      auto hi = records.end();
      if (filter.range) {
        lo = std::lower_bound(records.begin(), records.end(), filter.range->from_ms,
                              [](const AppearanceRecord& r, std::int64_t t) { return r.t_ms < t; });
        hi = std::lower_bound(lo, records.end(), filter.range->to_ms,
                              [](const AppearanceRecord& r, std::int64_t t) { return r.t_ms < t; });
      }
      for (auto it = lo; it != hi; ++it) hits.push_back(static_cast<std::size_t>(it - records.begin()));
    }
    fn(ep->timeline, hits);
  }
}

std::vector<AppearanceRecord> Store::query_appearances(const QueryFilter& filter) const {
  std::vector<AppearanceRecord> out;
  for_each_match(filter, [&](const Timeline& t, const std::vector<std::size_t>& hits) {
    for (std::size_t i : hits) out.push_back(t.records[i]);
  });
  return out;
}

PairCounts Store::query_cooccurrence(const QueryFilter& filter, std::int64_t window_ms) const {
  PairCounts out;
  for_each_match(filter, [&](const Timeline& t, const std::vector<std::size_t>& hits) {
    Timeline subset{t.meta, {}};
    for (std::size_t i : hits) subset.records.push_back(t.records[i]);
    const CoMatrix m = coappearance_counts(subset, window_ms);
    for (std::size_t a = 0; a < m.labels.size(); ++a) {
      for (std::size_t b = a + 1; b < m.labels.size(); ++b) {
        if (m.cells[a][b] > 0) out[{m.labels[a], m.labels[b]}] += m.cells[a][b];
      }
    }
  });
  return out;
}

std::vector<AggregateRow> Store::aggregate(const AggregateRequest& request) const {
  if (request.statistic == Statistic::duration && !request.coalesce) {
    fail(ErrorCode::MissingCoalesceParams, "duration statistic needs coalesce parameters");
  }
  std::map<std::string, std::int64_t> groups;
  auto key_of = [&](const EpisodeMeta& meta, const AppearanceRecord& r) {
    switch (request.group_by) {
      case GroupBy::celebrity: return r.celebrity_id;
      case GroupBy::episode: return meta.episode_id;
      case GroupBy::season: return meta.series_id + ":" + std::to_string(meta.season);
    }
    return r.celebrity_id;
  };

  for_each_match(request.filter, [&](const Timeline& t, const std::vector<std::size_t>& hits) {
    if (request.statistic == Statistic::duration) {
      std::map<std::string, std::vector<std::int64_t>> times;
      for (std::size_t i : hits) times[t.records[i].celebrity_id].push_back(t.records[i].t_ms);
      for (const auto& [celeb, ts] : times) {
        AppearanceRecord probe;
        probe.celebrity_id = celeb;
        groups[key_of(t.meta, probe)] +=
            total_duration(coalesce_times(ts, celeb, t.meta.duration_ms, *request.coalesce));
      }
      return;
    }
    for (std::size_t i : hits) {
      const auto& r = t.records[i];
      const std::string key = key_of(t.meta, r);
      auto [it, inserted] = groups.try_emplace(key, 0);
      switch (request.statistic) {
        case Statistic::count: ++it->second; break;
        case Statistic::first_seen: it->second = inserted ? r.t_ms : std::min(it->second, r.t_ms); break;
        case Statistic::last_seen: it->second = inserted ? r.t_ms : std::max(it->second, r.t_ms); break;
        case Statistic::duration: break;
      }
    }
  });

  std::vector<AggregateRow> rows;
  for (const auto& [k, v] : groups) rows.push_back({k, v});
  return rows;
}

std::vector<EpisodeMeta> Store::list_unprocessed() const {
  std::shared_lock read(mutex_);
  std::vector<EpisodeMeta> out;
  for (const auto& [id, e] : episodes_) {
    if (!e.meta.processed) out.push_back(e.meta);
  }
  return out;
}

void Store::mark_processed(const std::string& episode_id) {
  std::lock_guard writer(writer_);
  {
    std::shared_lock read(mutex_);
    auto it = episodes_.find(episode_id);
    if (it == episodes_.end()) fail(ErrorCode::UnknownEpisode, "unknown episode '" + episode_id + "'");
    if (it->second.meta.processed) return;
  }
  append_log({{"op", "mark"}, {"episode_id", episode_id}});
  std::unique_lock write(mutex_);
  episodes_[episode_id].meta.processed = true;
}

std::optional<EpisodeMeta> Store::episode(const std::string& episode_id) const {
  std::shared_lock read(mutex_);
  auto it = episodes_.find(episode_id);
  if (it == episodes_.end()) return std::nullopt;
  return it->second.meta;
}

std::vector<EpisodeMeta> Store::episodes() const {
  std::shared_lock read(mutex_);
  std::vector<EpisodeMeta> out;
  for (const auto& [id, e] : episodes_) out.push_back(e.meta);
  return out;
}

std::shared_ptr<const Timeline> Store::timeline(const std::string& episode_id) const {
  std::shared_lock read(mutex_);
  auto it = episodes_.find(episode_id);
  if (it == episodes_.end()) fail(ErrorCode::UnknownEpisode, "unknown episode '" + episode_id + "'");
  if (!it->second.data) fail(ErrorCode::NotProcessed, "episode '" + episode_id + "' has no stored timeline");
  return {it->second.data, &it->second.data->timeline};
}

std::size_t Store::record_count() const {
  std::shared_lock read(mutex_);
  return total_records_;
}

}  // namespace screenline
