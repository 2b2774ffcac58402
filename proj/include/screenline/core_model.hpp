#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "screenline/error.hpp"

namespace screenline {

using Json = nlohmann::json;

/// Episode-level metadata; `processed` flips once a timeline is stored.
struct EpisodeMeta {
  std::string episode_id;
  std::string series_id;
  int season = 1;
  int episode_number = 1;
  std::int64_t duration_ms = 0;
  bool processed = false;
  // Detection stream registered for processing, empty when none.
  std::string source;

  bool operator==(const EpisodeMeta&) const = default;
};

/// Face box in frame-relative coordinates: x, y, width, height.
using BBox = std::array<double, 4>;

/// One identity-resolved detection at a timestamp.
struct AppearanceRecord {
  std::string episode_id;
  std::string celebrity_id;
  std::int64_t t_ms = 0;
  std::uint64_t pos_index = 0;
  BBox bbox{0.0, 0.0, 0.0, 0.0};
  double score = 0.0;
  // Fields outside the schema, kept verbatim for round-trips.
  Json extra = Json::object();

  bool operator==(const AppearanceRecord&) const = default;
};

struct Interval {
  std::string celebrity_id;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  std::int64_t length() const { return end_ms - start_ms; }
  bool operator==(const Interval&) const = default;
};

/// (t_ms, pos_index) lexicographic order; total within an episode.
struct CanonicalOrder {
  bool operator()(const AppearanceRecord& a, const AppearanceRecord& b) const {
    if (a.t_ms != b.t_ms) return a.t_ms < b.t_ms;
    return a.pos_index < b.pos_index;
  }
};

void sort_canonical(std::vector<AppearanceRecord>& records);

/// Returns `record` unchanged if it satisfies every record invariant
/// against `meta`, otherwise throws OutOfRange, BadBBox or NegativeScore.
const AppearanceRecord& validate_record(const AppearanceRecord& record, const EpisodeMeta& meta);

bool bbox_valid(const BBox& bbox);

// JSON / JSON Lines

Json to_json(const AppearanceRecord& record);
AppearanceRecord record_from_json(const Json& j);

Json to_json(const EpisodeMeta& meta);
EpisodeMeta meta_from_json(const Json& j);

std::string to_jsonl_line(const AppearanceRecord& record);

void write_jsonl(std::ostream& out, const std::vector<AppearanceRecord>& records);

/// Parses JSON Lines; blank lines are skipped. Errors report the 1-based
/// line number (offset by `first_line - 1`) in the message.
std::vector<AppearanceRecord> read_jsonl(std::istream& in, std::size_t first_line = 1);
std::vector<AppearanceRecord> parse_jsonl(const std::string& text, std::size_t first_line = 1);

/// ParseError raised by the JSON Lines readers; `line()` is 1-based.
class LineParseError : public Error {
 public:
  LineParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::ParseError, message), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Cosine similarity mapped to [0,1]: (s+1)/2, clamped.
double cosine_confidence(double similarity);
/// L2 distance mapped to (0,1]: 1/(1+d).
double l2_confidence(double distance);

}  // namespace screenline
