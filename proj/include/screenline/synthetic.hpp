#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "screenline/core_model.hpp"
#include "screenline/vector_index.hpp"

namespace screenline::synth {

/// Ground-truth identities: `ids[i]` owns row i of `vectors` (unit norm).
struct IdentityGallery {
  std::vector<std::string> ids;
  std::vector<float> vectors;
  std::size_t dim = 512;

  std::size_t count() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }
  KnownIdentityIndex to_index(Metric metric = Metric::Cosine) const;
};

struct PresenceSpan {
  std::string celebrity_id;
  std::size_t gallery_row = 0;
  std::int64_t start_ms = 0;
  std::int64_t end_ms = 0;

  bool operator==(const PresenceSpan&) const = default;
};

struct SceneSchedule {
  std::int64_t duration_ms = 0;
  // Scene boundaries: scene i covers [scene_starts[i], scene_starts[i+1]).
  std::vector<std::int64_t> scene_starts;
  std::vector<PresenceSpan> spans;
};

struct DetectionEvent {
  std::int64_t t_ms = 0;
  std::string true_celebrity_id;
  std::vector<float> embedding;
  BBox bbox{};
  std::uint64_t frame = 0;
};

/// Largest pairwise cosine allowed between gallery rows when dim >= 64 and
/// n <= 1024.
inline constexpr double kMaxGalleryCosine = 0.5;

IdentityGallery gen_gallery(std::uint64_t seed, std::size_t n_identities, std::size_t dim = 512);

SceneSchedule gen_schedule(std::uint64_t seed, const IdentityGallery& gallery, std::int64_t duration_ms,
                           std::int64_t mean_scene_ms, double mean_cast_per_scene);

/// Frame times of the sampling grid, round(k * 1000 / fps), below duration_ms.
std::vector<std::int64_t> frame_grid(std::int64_t duration_ms, double fps);

/// One event per present identity per grid frame. `noise_sigma` is the
/// expected Euclidean norm of the perturbation added before re-normalizing
/// (per-component standard deviation noise_sigma / sqrt(dim)).
std::vector<DetectionEvent> emit_detections(const SceneSchedule& schedule, const IdentityGallery& gallery,
                                            double fps, double noise_sigma, std::uint64_t seed);

/// Events per identity implied by the schedule and grid.
std::map<std::string, std::size_t> expected_counts(const SceneSchedule& schedule, double fps);

Json schedule_to_json(const SceneSchedule& schedule);
SceneSchedule schedule_from_json(const Json& j);

std::string identity_name(std::size_t row, std::size_t n_identities);

}  // namespace screenline::synth
