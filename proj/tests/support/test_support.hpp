#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "screenline/aggregation.hpp"
#include "screenline/rng.hpp"

namespace screenline::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("screenline-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline AppearanceRecord rec(const std::string& episode, const std::string& celeb, std::int64_t t,
                            std::uint64_t pos, double score = 0.9) {
  AppearanceRecord r;
  r.episode_id = episode;
  r.celebrity_id = celeb;
  r.t_ms = t;
  r.pos_index = pos;
  r.bbox = {0.25, 0.25, 0.125, 0.125};
  r.score = score;
  return r;
}

inline EpisodeMeta meta(const std::string& id, std::int64_t duration_ms, const std::string& series = "s",
                        int season = 1, int number = 1) {
  EpisodeMeta m;
  m.episode_id = id;
  m.series_id = series;
  m.season = season;
  m.episode_number = number;
  m.duration_ms = duration_ms;
  return m;
}

/// Random valid timeline: `n` records over `n_celebs` ids, times on a
/// 250 ms grid inside [0, duration).
inline Timeline random_timeline(std::uint64_t seed, std::size_t n, std::size_t n_celebs, std::int64_t duration_ms,
                                const std::string& episode = "ep") {
  Rng rng(seed);
  std::vector<AppearanceRecord> records;
  const std::uint64_t slots = static_cast<std::uint64_t>(duration_ms / 250);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::int64_t>(rng.below(slots)) * 250;
    const std::string celeb = "c" + std::to_string(rng.below(n_celebs));
    records.push_back(rec(episode, celeb, t, i, 0.5 + 0.5 * rng.uniform01()));
  }
  return make_timeline(meta(episode, duration_ms), std::move(records));
}

}  // namespace screenline::testing
