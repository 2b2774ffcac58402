#include "screenline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <exception>
#include <thread>

#include "screenline/error.hpp"

namespace screenline {

ChunkPlan plan_chunks(std::int64_t duration_ms, std::size_t n_workers, std::string episode_id) {
  if (duration_ms < 1) fail(ErrorCode::ZeroDuration, "episode duration must be positive");
  if (n_workers < 1) fail(ErrorCode::InvalidArgument, "need at least one worker");
  ChunkPlan plan;
  plan.episode_id = std::move(episode_id);
  plan.n_workers = n_workers;
  const auto d = static_cast<__int128>(duration_ms);
  const auto n = static_cast<__int128>(n_workers);
  for (std::size_t i = 0; i < n_workers; ++i) {
    const auto start = static_cast<std::int64_t>(static_cast<__int128>(i) * d / n);
    const auto end = static_cast<std::int64_t>(static_cast<__int128>(i + 1) * d / n);
    if (end > start) plan.chunks.push_back({start, end});
  }
  return plan;
}

std::vector<Detection> PassthroughDetector::detect(std::span<const Frame> frames) {
  std::vector<Detection> out;
  for (const auto& frame : frames) {
    for (const auto& face : frame.faces) {
      Detection d;
      d.t_ms = frame.t_ms;
      for (std::size_t i = 0; i < 4; ++i) d.bbox[i] = face.bbox[i];
      d.payload_type = face.payload_type;
      d.embedding = face.embedding;
      d.crop = face.crop;
      out.push_back(std::move(d));
    }
  }
  return out;
}

std::vector<EmbedResult> PayloadEmbedder::embed(std::span<const Detection> batch) {
  std::vector<EmbedResult> out;
  out.reserve(batch.size());
  for (const auto& d : batch) {
    if (d.payload_type != PayloadType::Embedding) {
      fail(ErrorCode::StageFailure, "crop payloads need an embedding model; none is configured");
    }
    out.push_back({d.pos_index, d.embedding});
  }
  return out;
}

StageFactory synthetic_stages() {
  return {[] { return std::make_unique<PassthroughDetector>(); }, [] { return std::make_unique<PayloadEmbedder>(); }};
}

PositionEncoder::PositionEncoder(std::size_t chunk_ordinal, std::uint64_t stride) : stride_(stride) {
  if (stride == 0) fail(ErrorCode::InvalidArgument, "offset stride must be positive");
  if (chunk_ordinal > UINT64_MAX / stride) fail(ErrorCode::OffsetOverflow, "chunk ordinal exceeds offset space");
  base_ = static_cast<std::uint64_t>(chunk_ordinal) * stride;
}

void PositionEncoder::encode(std::span<Detection> detections) {
  if (detections.size() > stride_ - next_) {
    fail(ErrorCode::OffsetOverflow, "chunk produced more than " + std::to_string(stride_) + " detections");
  }
  for (auto& d : detections) d.pos_index = base_ + next_++;
}

void encode_positions(std::span<Detection> detections, std::size_t chunk_ordinal, std::uint64_t stride) {
  PositionEncoder(chunk_ordinal, stride).encode(detections);
}

namespace {

std::string where(std::size_t worker, const char* stage, std::size_t batch) {
  return "worker " + std::to_string(worker) + " " + stage + " batch " + std::to_string(batch);
}

}  // namespace

WorkerOutput run_worker(const std::string& episode_id, const ChunkSpan& span, std::size_t worker,
                        std::span<const Frame> frames, Detector& detector, Embedder& embedder,
                        const BatchConfig& batch) {
  if (batch.detect_batch < 1 || batch.embed_batch < 1) fail(ErrorCode::InvalidArgument, "batch sizes must be >= 1");
  for (const auto& f : frames) {
    if (!span.contains(f.t_ms)) fail(ErrorCode::InvalidArgument, "frame outside the worker's chunk");
  }

  WorkerOutput out;
  out.episode_id = episode_id;
  out.span = span;
  out.worker = worker;

  PositionEncoder encoder(worker);
  std::deque<Detection> pending;
  std::size_t embed_batches = 0;
  std::int64_t last_t = span.start_ms;

  auto flush = [&](std::size_t n) {
    std::vector<Detection> group(std::make_move_iterator(pending.begin()),
                                 std::make_move_iterator(pending.begin() + static_cast<std::ptrdiff_t>(n)));
    pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<EmbedResult> results;
    try {
      results = embedder.embed(group);
    } catch (const std::exception& e) {
      fail(ErrorCode::StageFailure, where(worker, "embed", embed_batches) + ": " + e.what());
    }
    if (results.size() != group.size()) {
      fail(ErrorCode::MisalignedStage, where(worker, "embed", embed_batches) + ": " +
                                           std::to_string(results.size()) + " outputs for " +
                                           std::to_string(group.size()) + " inputs");
    }
    for (std::size_t i = 0; i < group.size(); ++i) {
      if (results[i].sentinel != group[i].pos_index) {
        fail(ErrorCode::MisalignedStage, where(worker, "embed", embed_batches) + ": output " + std::to_string(i) +
                                             " echoes pos_index " + std::to_string(results[i].sentinel) +
                                             ", expected " + std::to_string(group[i].pos_index));
      }
      out.items.push_back({group[i].t_ms, group[i].pos_index, std::move(results[i].vector), group[i].bbox});
    }
    ++embed_batches;
  };

  std::size_t detect_batches = 0;
  for (std::size_t first = 0; first < frames.size(); first += batch.detect_batch) {
    const std::size_t n = std::min(batch.detect_batch, frames.size() - first);
    std::vector<Detection> found;
    try {
      found = detector.detect(frames.subspan(first, n));
    } catch (const std::exception& e) {
      fail(ErrorCode::StageFailure, where(worker, "detect", detect_batches) + ": " + e.what());
    }
    for (const auto& d : found) {
      if (!span.contains(d.t_ms) || d.t_ms < last_t) {
        fail(ErrorCode::MisalignedStage, where(worker, "detect", detect_batches) + ": detection at " +
                                             std::to_string(d.t_ms) + " ms breaks frame order");
      }
      last_t = d.t_ms;
    }
    encoder.encode(found);
    out.detections += found.size();
    for (auto& d : found) pending.push_back(std::move(d));
    out.max_in_flight = std::max(out.max_in_flight, pending.size());
    while (pending.size() >= batch.embed_batch) flush(batch.embed_batch);
    ++detect_batches;
  }
  if (!pending.empty()) flush(pending.size());
  return out;
}

Json RunReport::to_json() const {
  return {{"episode_id", episode_id}, {"workers", workers},   {"detections", detections}, {"embeddings", embeddings},
          {"accepted", accepted},     {"rejected", rejected}, {"wall_ms", wall_ms}};
}

EpisodeRun run_episode(const EpisodeMeta& meta, std::span<const Frame> frames, const KnownIdentityIndex& index,
                       const StageFactory& stages, const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const ChunkPlan plan = plan_chunks(meta.duration_ms, options.n_workers, meta.episode_id);
  if (options.k < 1) fail(ErrorCode::InvalidArgument, "k must be at least 1");
  for (const auto& f : frames) {
    if (f.t_ms < 0 || f.t_ms >= meta.duration_ms) {
      fail(ErrorCode::OutOfRange, "frame at " + std::to_string(f.t_ms) + " ms lies outside the episode");
    }
    for (const auto& face : f.faces) {
      if (face.payload_type == PayloadType::Embedding && face.embedding.size() != index.dim()) {
        fail(ErrorCode::GalleryDimMismatch, "embedding dim " + std::to_string(face.embedding.size()) +
                                                " != gallery dim " + std::to_string(index.dim()));
      }
    }
  }

  const std::size_t n = plan.chunks.size();
  std::vector<WorkerOutput> outputs(n);
  std::vector<std::vector<AppearanceRecord>> accepted(n);
  std::vector<std::exception_ptr> errors(n);

  auto work = [&](std::size_t w) {
    try {
      const ChunkSpan span = plan.chunks[w];
      auto lo = std::lower_bound(frames.begin(), frames.end(), span.start_ms,
                                 [](const Frame& f, std::int64_t t) { return f.t_ms < t; });
      auto hi = std::lower_bound(frames.begin(), frames.end(), span.end_ms,
                                 [](const Frame& f, std::int64_t t) { return f.t_ms < t; });
      auto detector = stages.detector();
      auto embedder = stages.embedder();
      outputs[w] = run_worker(meta.episode_id, span, w, std::span<const Frame>(lo, hi), *detector, *embedder,
                              options.batch);
      for (const auto& item : outputs[w].items) {
        if (item.embedding.size() != index.dim()) {
          fail(ErrorCode::GalleryDimMismatch, "embedder produced dim " + std::to_string(item.embedding.size()));
        }
        const auto matches = index.search_topk(item.embedding, options.k);
        const auto id = classify(matches, options.threshold, index.metric());
        if (!id) continue;
        AppearanceRecord r;
        r.episode_id = meta.episode_id;
        r.celebrity_id = *id;
        r.t_ms = item.t_ms;
        r.pos_index = item.pos_index;
        r.bbox = item.bbox;
        r.score = match_confidence(matches.front(), index.metric());
        accepted[w].push_back(std::move(r));
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  {
    std::vector<std::jthread> threads;
    threads.reserve(n);
    for (std::size_t w = 0; w < n; ++w) threads.emplace_back(work, w);
  }

  for (std::size_t w = 0; w < n; ++w) {
    if (!errors[w]) continue;
    try {
      std::rethrow_exception(errors[w]);
    } catch (const Error& e) {
      if (std::string_view(e.what()).starts_with("worker ")) throw;
      throw Error(e.code(), "worker " + std::to_string(w) + ": " + e.what());
    }
  }

  EpisodeRun run;
  run.report.episode_id = meta.episode_id;
  run.report.workers = n;
  for (std::size_t w = 0; w < n; ++w) {
    run.report.detections += outputs[w].detections;
    run.report.embeddings += outputs[w].items.size();
    run.report.accepted += accepted[w].size();
    for (auto& r : accepted[w]) run.records.push_back(std::move(r));
  }
  run.report.rejected = run.report.embeddings - run.report.accepted;
  sort_canonical(run.records);
  run.outputs = std::move(outputs);
  run.report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                           .count();
  return run;
}

}  // namespace screenline
