#include "screenline/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

#include <json.hpp>

#include "screenline/binary_io.hpp"
#include "screenline/core_model.hpp"
#include "screenline/error.hpp"

namespace screenline {

namespace {

constexpr char kMagic[4] = {'K', 'E', 'I', 'X'};
constexpr std::uint32_t kVersion = 1;
constexpr double kZeroNorm = 1e-12;

// Eight independent double accumulators: exact enough for ranking parity
// with a plain sequential sum, and short dependency chains. The query side is
// widened to double once per search.
template <typename Q>
double dot(const Q* a, const float* b, std::size_t n) {
  double s[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t k = 0; k < 8; ++k) s[k] += static_cast<double>(a[i + k]) * static_cast<double>(b[i + k]);
  }
  for (; i < n; ++i) s[0] += static_cast<double>(a[i]) * b[i];
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

double squared_distance(const double* a, const float* b, std::size_t n) {
  double s[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t k = 0; k < 8; ++k) {
      const double d = a[i + k] - static_cast<double>(b[i + k]);
      s[k] += d * d;
    }
  }
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    s[0] += d * d;
  }
  return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

}  // namespace

std::string to_string(Metric metric) { return metric == Metric::Cosine ? "cosine" : "l2"; }

Metric metric_from_string(const std::string& name) {
  if (name == "cosine") return Metric::Cosine;
  if (name == "l2") return Metric::L2;
  fail(ErrorCode::InvalidArgument, "unknown metric '" + name + "' (expected cosine or l2)");
}

KnownIdentityIndex KnownIdentityIndex::build(std::vector<std::string> ids, std::span<const float> vectors,
                                             std::size_t dim, Metric metric) {
  if (dim == 0 && !ids.empty()) fail(ErrorCode::DimMismatch, "dimension must be positive");
  if (vectors.size() != ids.size() * dim) {
    fail(ErrorCode::DimMismatch, "vector payload does not hold " + std::to_string(ids.size()) + " rows of dim " +
                                     std::to_string(dim));
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) fail(ErrorCode::DuplicateId, "duplicate identity id '" + id + "'");
  }
  for (float v : vectors) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "gallery vectors must be finite");
  }

  KnownIdentityIndex index;
  index.dim_ = dim;
  index.metric_ = metric;
  index.ids_ = std::move(ids);
  index.vectors_.assign(vectors.begin(), vectors.end());
  if (metric == Metric::Cosine) {
    for (std::size_t r = 0; r < index.ids_.size(); ++r) {
      float* row = index.vectors_.data() + r * dim;
      const double norm = std::sqrt(dot(row, row, dim));
      if (norm < kZeroNorm) fail(ErrorCode::ZeroVector, "zero vector for '" + index.ids_[r] + "'");
      for (std::size_t c = 0; c < dim; ++c) row[c] = static_cast<float>(row[c] / norm);
    }
  }
  index.finish();
  return index;
}

KnownIdentityIndex KnownIdentityIndex::build(std::vector<std::string> ids,
                                             const std::vector<std::vector<float>>& rows, Metric metric) {
  if (ids.size() != rows.size()) fail(ErrorCode::InvalidArgument, "ids and rows differ in length");
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  std::vector<float> flat;
  flat.reserve(rows.size() * dim);
  for (const auto& row : rows) {
    if (row.size() != dim) fail(ErrorCode::DimMismatch, "rows do not share one dimension");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return build(std::move(ids), flat, dim, metric);
}

void KnownIdentityIndex::finish() {
  norms_.resize(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    const float* row = vectors_.data() + r * dim_;
    norms_[r] = std::sqrt(dot(row, row, dim_));
  }
}

std::vector<Match> KnownIdentityIndex::search_topk(std::span<const float> query, std::size_t k) const {
  if (k == 0) fail(ErrorCode::InvalidArgument, "k must be at least 1");
  if (ids_.empty()) return {};
  if (query.size() != dim_) {
    fail(ErrorCode::DimMismatch,
         "query dim " + std::to_string(query.size()) + " != index dim " + std::to_string(dim_));
  }

  struct Scored {
    double score;
    std::size_t row;
  };
  const std::vector<double> q(query.begin(), query.end());
  std::vector<Scored> scored(ids_.size());
  if (metric_ == Metric::Cosine) {
    const double qnorm = std::sqrt(dot(query.data(), query.data(), dim_));
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      const double denom = qnorm * norms_[r];
      const double s = denom > 0.0 ? dot(q.data(), vectors_.data() + r * dim_, dim_) / denom : 0.0;
      scored[r] = {s, r};
    }
  } else {
    for (std::size_t r = 0; r < ids_.size(); ++r) {
      scored[r] = {std::sqrt(squared_distance(q.data(), vectors_.data() + r * dim_, dim_)), r};
    }
  }

  const bool higher_better = metric_ == Metric::Cosine;
  auto better = [higher_better](const Scored& a, const Scored& b) {
    if (a.score != b.score) return higher_better ? a.score > b.score : a.score < b.score;
    return a.row < b.row;
  };
  const std::size_t n = std::min(k, scored.size());
  const auto mid = scored.begin() + static_cast<std::ptrdiff_t>(n);
  if (n < scored.size()) std::nth_element(scored.begin(), mid, scored.end(), better);
  std::sort(scored.begin(), mid, better);

  std::vector<Match> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({ids_[scored[i].row], scored[i].score, i, scored[i].row});
  }
  return out;
}

std::optional<std::string> classify(const std::vector<Match>& matches, double threshold, Metric metric) {
  if (matches.empty()) return std::nullopt;
  const Match& top = matches.front();
  const bool accepted = metric == Metric::Cosine ? top.raw_score >= threshold : top.raw_score <= threshold;
  if (!accepted) return std::nullopt;
  return top.celebrity_id;
}

double match_confidence(const Match& match, Metric metric) {
  return metric == Metric::Cosine ? cosine_confidence(match.raw_score) : l2_confidence(match.raw_score);
}

std::vector<std::uint8_t> KnownIdentityIndex::serialize() const {
  ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(metric_));
  w.u8(0);
  w.u8(0);
  w.u8(0);
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u32(static_cast<std::uint32_t>(ids_.size()));
  for (float v : vectors_) w.f32(v);
  const std::string ids_json = nlohmann::json(ids_).dump();
  w.u32(static_cast<std::uint32_t>(ids_json.size()));
  w.bytes(ids_json);
  w.u32(crc32c(w.buffer()));
  return std::move(w.buffer());
}

KnownIdentityIndex KnownIdentityIndex::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) fail(ErrorCode::BadMagic, "not a KEIX index file");
  const std::uint32_t version = r.u32();
  if (version != kVersion) fail(ErrorCode::VersionUnsupported, "index version " + std::to_string(version));
  const std::uint8_t metric = r.u8();
  r.take(3);
  const std::uint32_t dim = r.u32();
  const std::uint32_t count = r.u32();
  const std::uint64_t payload = static_cast<std::uint64_t>(dim) * count * sizeof(float);
  if (payload > r.remaining()) {
    fail(ErrorCode::TruncatedFile, "header declares " + std::to_string(count) + " rows of dim " +
                                       std::to_string(dim) + " but the file is shorter");
  }
  std::vector<float> vectors(static_cast<std::size_t>(dim) * count);
  for (auto& v : vectors) v = r.f32();
  const std::uint32_t ids_len = r.u32();
  auto ids_bytes = r.take(ids_len);
  const std::size_t crc_offset = r.offset();
  const std::uint32_t stored_crc = r.u32();
  if (!r.at_end()) fail(ErrorCode::CorruptFile, "trailing bytes after checksum");
  if (crc32c(bytes.first(crc_offset)) != stored_crc) fail(ErrorCode::ChecksumMismatch, "index checksum mismatch");
  if (metric > 1) fail(ErrorCode::CorruptFile, "unknown metric tag " + std::to_string(metric));

  std::vector<std::string> ids;
  try {
    ids = nlohmann::json::parse(ids_bytes.begin(), ids_bytes.end()).get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::CorruptFile, "id table is not a JSON string array");
  }
  if (ids.size() != count) fail(ErrorCode::CorruptFile, "id table length differs from row count");

  KnownIdentityIndex index;
  index.dim_ = dim;
  index.metric_ = static_cast<Metric>(metric);
  index.ids_ = std::move(ids);
  index.vectors_ = std::move(vectors);
  index.finish();
  return index;
}

void KnownIdentityIndex::save(const std::string& path) const { write_file_atomic(path, serialize()); }

KnownIdentityIndex KnownIdentityIndex::load(const std::string& path) { return deserialize(read_file_bytes(path)); }

bool KnownIdentityIndex::operator==(const KnownIdentityIndex& other) const {
  return dim_ == other.dim_ && metric_ == other.metric_ && ids_ == other.ids_ &&
         vectors_.size() == other.vectors_.size() &&
         std::memcmp(vectors_.data(), other.vectors_.data(), vectors_.size() * sizeof(float)) == 0;
}

}  // namespace screenline
