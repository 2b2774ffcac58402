#include "screenline/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace screenline {

namespace {

const char* const kRecordFields[] = {"episode_id", "celebrity_id", "t_ms", "pos_index", "bbox", "score"};

bool is_record_field(const std::string& key) {
  return std::find(std::begin(kRecordFields), std::end(kRecordFields), key) != std::end(kRecordFields);
}

template <typename T>
T required(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    fail(ErrorCode::ParseError, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

void sort_canonical(std::vector<AppearanceRecord>& records) {
  std::sort(records.begin(), records.end(), CanonicalOrder{});
}

bool bbox_valid(const BBox& b) {
  for (double v : b) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
  }
  return b[0] + b[2] <= 1.0 && b[1] + b[3] <= 1.0;
}

const AppearanceRecord& validate_record(const AppearanceRecord& record, const EpisodeMeta& meta) {
  if (record.t_ms < 0 || record.t_ms > meta.duration_ms) {
    fail(ErrorCode::OutOfRange, "t_ms " + std::to_string(record.t_ms) + " outside [0, " +
                                    std::to_string(meta.duration_ms) + "]");
  }
  if (!bbox_valid(record.bbox)) fail(ErrorCode::BadBBox, "bbox outside the unit frame");
  // Scores above 1 share the code: the only valid range is [0,1].
  if (!std::isfinite(record.score) || record.score < 0.0 || record.score > 1.0) {
    fail(ErrorCode::NegativeScore, "score outside [0,1]");
  }
  return record;
}

Json to_json(const AppearanceRecord& r) {
  Json j = r.extra.is_object() ? r.extra : Json::object();
  j["episode_id"] = r.episode_id;
  j["celebrity_id"] = r.celebrity_id;
  j["t_ms"] = r.t_ms;
  j["pos_index"] = r.pos_index;
  j["bbox"] = Json::array({r.bbox[0], r.bbox[1], r.bbox[2], r.bbox[3]});
  j["score"] = r.score;
  return j;
}

AppearanceRecord record_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "record is not a JSON object");
  AppearanceRecord r;
  r.episode_id = required<std::string>(j, "episode_id");
  r.celebrity_id = required<std::string>(j, "celebrity_id");
  const Json& t = j.contains("t_ms") ? j["t_ms"] : Json();
  if (!t.is_number_integer()) fail(ErrorCode::ParseError, "field 't_ms' must be an integer");
  r.t_ms = t.get<std::int64_t>();
  const Json& p = j.contains("pos_index") ? j["pos_index"] : Json();
  if (!p.is_number_unsigned() && !(p.is_number_integer() && p.get<std::int64_t>() >= 0)) {
    fail(ErrorCode::ParseError, "field 'pos_index' must be a non-negative integer");
  }
  r.pos_index = p.get<std::uint64_t>();
  auto box = required<std::vector<double>>(j, "bbox");
  if (box.size() != 4) fail(ErrorCode::ParseError, "field 'bbox' must hold 4 numbers");
  std::copy(box.begin(), box.end(), r.bbox.begin());
  r.score = required<double>(j, "score");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!is_record_field(it.key())) r.extra[it.key()] = it.value();
  }
  return r;
}

Json to_json(const EpisodeMeta& m) {
  Json j = {{"episode_id", m.episode_id},   {"series_id", m.series_id},
            {"season", m.season},           {"episode_number", m.episode_number},
            {"duration_ms", m.duration_ms}, {"processed", m.processed}};
  if (!m.source.empty()) j["source"] = m.source;
  return j;
}

EpisodeMeta meta_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "episode meta is not a JSON object");
  EpisodeMeta m;
  m.episode_id = required<std::string>(j, "episode_id");
  m.series_id = j.value("series_id", std::string());
  m.season = j.value("season", 1);
  m.episode_number = j.value("episode_number", 1);
  m.duration_ms = required<std::int64_t>(j, "duration_ms");
  m.processed = j.value("processed", false);
  m.source = j.value("source", std::string());
  if (m.episode_id.empty()) fail(ErrorCode::ParseError, "episode_id must not be empty");
  if (m.season < 1 || m.episode_number < 1) fail(ErrorCode::ParseError, "season and episode_number must be positive");
  if (m.duration_ms < 0) fail(ErrorCode::ParseError, "duration_ms must be non-negative");
  return m;
}

std::string to_jsonl_line(const AppearanceRecord& record) { return to_json(record).dump(); }

void write_jsonl(std::ostream& out, const std::vector<AppearanceRecord>& records) {
  for (const auto& r : records) out << to_jsonl_line(r) << '\n';
}

std::vector<AppearanceRecord> read_jsonl(std::istream& in, std::size_t first_line) {
  std::vector<AppearanceRecord> out;
  std::string line;
  std::size_t number = first_line - 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(Json::parse(line)));
    } catch (const Json::parse_error& e) {
      throw LineParseError(number, "line " + std::to_string(number) + ": " + e.what());
    } catch (const Error& e) {
      throw LineParseError(number, "line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

std::vector<AppearanceRecord> parse_jsonl(const std::string& text, std::size_t first_line) {
  std::istringstream in(text);
  return read_jsonl(in, first_line);
}

double cosine_confidence(double similarity) { return std::clamp((similarity + 1.0) / 2.0, 0.0, 1.0); }

double l2_confidence(double distance) { return 1.0 / (1.0 + std::max(distance, 0.0)); }

}  // namespace screenline
