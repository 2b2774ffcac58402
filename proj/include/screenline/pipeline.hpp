#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "screenline/core_model.hpp"
#include "screenline/detections_io.hpp"
#include "screenline/vector_index.hpp"

namespace screenline {

/// Half-open time span [start_ms, end_ms).
struct ChunkSpan {
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  bool contains(std::int64_t t) const { return t >= start_ms && t < end_ms; }
  bool operator==(const ChunkSpan&) const = default;
};

struct ChunkPlan {
  std::string episode_id;
  std::size_t n_workers = 1;
  std::vector<ChunkSpan> chunks;
};

/// Chunk i = [floor(i*D/N), floor((i+1)*D/N)); empty chunks are dropped.
ChunkPlan plan_chunks(std::int64_t duration_ms, std::size_t n_workers, std::string episode_id = {});

struct BatchConfig {
  std::size_t detect_batch = 64;
  std::size_t embed_batch = 128;
};

/// A detected face after position encoding. Carries its source frame time
/// and the globally unique positional index used to re-join stage outputs.
struct Detection {
  std::int64_t t_ms = 0;
  std::uint64_t pos_index = 0;
  BBox bbox{};
  PayloadType payload_type = PayloadType::Embedding;
  std::vector<float> embedding;
  std::vector<std::uint8_t> crop;
};

/// Embedder output for one input. `sentinel` must echo the input's
/// pos_index; it is how misaligned stages are caught.
struct EmbedResult {
  std::uint64_t sentinel = 0;
  std::vector<float> vector;
};

class Detector {
 public:
  virtual ~Detector() = default;
  /// Detections for a batch of frames, in frame order. Each detection's
  /// t_ms is its frame's time; pos_index is assigned downstream.
  virtual std::vector<Detection> detect(std::span<const Frame> frames) = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One result per input, in input order.
  virtual std::vector<EmbedResult> embed(std::span<const Detection> batch) = 0;
};

/// Creates fresh stage instances; each worker owns the pair it gets.
struct StageFactory {
  std::function<std::unique_ptr<Detector>()> detector;
  std::function<std::unique_ptr<Embedder>()> embedder;
};

/// Synthetic-mode stages: faces pass through as detections and the
/// embedder returns the embedding payload carried by the stream.
class PassthroughDetector final : public Detector {
 public:
  std::vector<Detection> detect(std::span<const Frame> frames) override;
};

class PayloadEmbedder final : public Embedder {
 public:
  std::vector<EmbedResult> embed(std::span<const Detection> batch) override;
};

StageFactory synthetic_stages();

inline constexpr std::uint64_t kOffsetStride = std::uint64_t{1} << 32;

/// Assigns pos_index = chunk base + arrival ordinal. The ordinal keeps
/// counting across calls so a chunk can be encoded batch by batch.
class PositionEncoder {
 public:
  explicit PositionEncoder(std::size_t chunk_ordinal, std::uint64_t stride = kOffsetStride);

  std::uint64_t base() const { return base_; }
  std::uint64_t encoded() const { return next_; }
  void encode(std::span<Detection> detections);

 private:
  std::uint64_t base_;
  std::uint64_t stride_;
  std::uint64_t next_ = 0;
};

void encode_positions(std::span<Detection> detections, std::size_t chunk_ordinal,
                      std::uint64_t stride = kOffsetStride);

struct EncodedEmbedding {
  std::int64_t t_ms = 0;
  std::uint64_t pos_index = 0;
  std::vector<float> embedding;
  BBox bbox{};
};

struct WorkerOutput {
  std::string episode_id;
  ChunkSpan span;
  std::size_t worker = 0;
  std::vector<EncodedEmbedding> items;
  std::size_t detections = 0;
  // Peak number of detections held between the two stages.
  std::size_t max_in_flight = 0;
};

/// Runs detect -> encode -> embed over one chunk's frames. `frames` must lie
/// inside `span` and be time ordered.
WorkerOutput run_worker(const std::string& episode_id, const ChunkSpan& span, std::size_t worker,
                        std::span<const Frame> frames, Detector& detector, Embedder& embedder,
                        const BatchConfig& batch);

struct RunOptions {
  BatchConfig batch;
  std::size_t n_workers = 1;
  double threshold = 0.5;
  std::size_t k = 5;
};

struct RunReport {
  std::string episode_id;
  std::size_t workers = 0;
  std::size_t detections = 0;
  std::size_t embeddings = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::int64_t wall_ms = 0;

  Json to_json() const;
};

struct EpisodeRun {
  std::vector<WorkerOutput> outputs;
  // Accepted records, canonical order.
  std::vector<AppearanceRecord> records;
  RunReport report;
};

/// Plans chunks, runs one worker thread per non-empty chunk, searches every
/// embedding against `index` and keeps the accepted ones as records.
EpisodeRun run_episode(const EpisodeMeta& meta, std::span<const Frame> frames, const KnownIdentityIndex& index,
                       const StageFactory& stages, const RunOptions& options);

}  // namespace screenline
