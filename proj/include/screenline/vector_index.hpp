#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace screenline {

enum class Metric : std::uint8_t { Cosine = 0, L2 = 1 };

std::string to_string(Metric metric);
Metric metric_from_string(const std::string& name);

/// One ranked gallery hit. `raw_score` is a cosine similarity (higher is
/// better) or a Euclidean distance (lower is better) depending on the metric.
struct Match {
  std::string celebrity_id;
  double raw_score = 0.0;
  std::size_t rank = 0;
  std::size_t row = 0;
};

/// Immutable, exact-search gallery of known identities.
///
/// Vectors are a dense row-major float32 matrix. Under Cosine the rows are
/// normalized at build time. Searches are a full scan accumulated in double
/// precision; equal scores rank by ascending row position.
class KnownIdentityIndex {
 public:
  KnownIdentityIndex() = default;

  static KnownIdentityIndex build(std::vector<std::string> ids, std::span<const float> vectors, std::size_t dim,
                                  Metric metric);
  static KnownIdentityIndex build(std::vector<std::string> ids, const std::vector<std::vector<float>>& rows,
                                  Metric metric);

  std::size_t dim() const { return dim_; }
  std::size_t count() const { return ids_.size(); }
  Metric metric() const { return metric_; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const float> vectors() const { return vectors_; }
  std::span<const float> row(std::size_t i) const { return {vectors_.data() + i * dim_, dim_}; }

  std::vector<Match> search_topk(std::span<const float> query, std::size_t k) const;

  void save(const std::string& path) const;
  static KnownIdentityIndex load(const std::string& path);

  std::vector<std::uint8_t> serialize() const;
  static KnownIdentityIndex deserialize(std::span<const std::uint8_t> bytes);

  bool operator==(const KnownIdentityIndex& other) const;

 private:
  void finish();

  std::size_t dim_ = 0;
  Metric metric_ = Metric::Cosine;
  std::vector<std::string> ids_;
  std::vector<float> vectors_;
  std::vector<double> norms_;
};

inline KnownIdentityIndex build_index(std::vector<std::string> ids, const std::vector<std::vector<float>>& rows,
                                      Metric metric) {
  return KnownIdentityIndex::build(std::move(ids), rows, metric);
}

inline std::vector<Match> search_topk(const KnownIdentityIndex& index, std::span<const float> query, std::size_t k) {
  return index.search_topk(query, k);
}

/// Accepts the rank-0 match iff it passes `threshold` under `metric`.
std::optional<std::string> classify(const std::vector<Match>& matches, double threshold, Metric metric);

/// Confidence in [0,1] for an accepted match.
double match_confidence(const Match& match, Metric metric);

inline void save_index(const KnownIdentityIndex& index, const std::string& path) { index.save(path); }
inline KnownIdentityIndex load_index(const std::string& path) { return KnownIdentityIndex::load(path); }

}  // namespace screenline
