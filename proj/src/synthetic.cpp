#include "screenline/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "screenline/error.hpp"
#include "screenline/rng.hpp"

namespace screenline::synth {

namespace {

constexpr int kMaxRedraws = 10000;
constexpr double kBoxSide = 0.125;

double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

void draw_unit(Rng& rng, std::span<float> out) {
  std::vector<double> v(out.size());
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = rng.normal();
      norm2 += x * x;
    }
  } while (norm2 <= 0.0);
  const double norm = std::sqrt(norm2);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
}

}  // namespace

std::string identity_name(std::size_t row, std::size_t n_identities) {
  std::size_t width = 3;
  for (std::size_t n = n_identities > 0 ? n_identities - 1 : 0; n >= 1000; n /= 10) ++width;
  std::string digits = std::to_string(row);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return "celeb_" + digits;
}

KnownIdentityIndex IdentityGallery::to_index(Metric metric) const {
  return KnownIdentityIndex::build(ids, vectors, dim, metric);
}

IdentityGallery gen_gallery(std::uint64_t seed, std::size_t n_identities, std::size_t dim) {
  if (dim < 2) fail(ErrorCode::DimTooSmall, "gallery dimension must be at least 2");
  if (n_identities < 1) fail(ErrorCode::InvalidArgument, "gallery needs at least one identity");

  Rng rng(seed);
  IdentityGallery g;
  g.dim = dim;
  g.vectors.resize(n_identities * dim);
  const bool separate = dim >= 64 && n_identities <= 1024;
  for (std::size_t r = 0; r < n_identities; ++r) {
    std::span<float> row(g.vectors.data() + r * dim, dim);
    for (int attempt = 0;; ++attempt) {
      if (attempt == kMaxRedraws) fail(ErrorCode::DimTooSmall, "cannot separate gallery rows in this dimension");
      draw_unit(rng, row);
      if (!separate) break;
      bool ok = true;
      for (std::size_t p = 0; p < r && ok; ++p) ok = dot(row, g.row(p)) < kMaxGalleryCosine;
      if (ok) break;
    }
    g.ids.push_back(identity_name(r, n_identities));
  }
  return g;
}

SceneSchedule gen_schedule(std::uint64_t seed, const IdentityGallery& gallery, std::int64_t duration_ms,
                           std::int64_t mean_scene_ms, double mean_cast_per_scene) {
  if (gallery.count() == 0) fail(ErrorCode::EmptyGallery, "schedule needs a non-empty gallery");
  if (mean_scene_ms < 1000 || duration_ms < mean_scene_ms) {
    fail(ErrorCode::InvalidArgument, "require duration_ms >= mean_scene_ms >= 1000");
  }

  Rng rng(seed);
  SceneSchedule s;
  s.duration_ms = duration_ms;
  const std::int64_t half = mean_scene_ms / 2;
  const double cast_floor = std::floor(std::max(mean_cast_per_scene, 0.0));
  const double cast_frac = std::max(mean_cast_per_scene, 0.0) - cast_floor;
  const std::size_t n = gallery.count();

  // Per row, the span currently open (index into s.spans) if it ends where
  // the next scene starts, so back-to-back scenes extend one span.
  std::vector<std::ptrdiff_t> open(n, -1);
  std::vector<std::size_t> rows(n);

  for (std::int64_t pos = 0; pos < duration_ms;) {
    std::int64_t len = half + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(mean_scene_ms) + 1));
    const std::int64_t remaining = duration_ms - pos;
    if (remaining - len <= half) len = remaining;
    const std::int64_t end = pos + len;
    s.scene_starts.push_back(pos);

    auto cast = static_cast<std::size_t>(cast_floor);
    if (rng.uniform01() < cast_frac) ++cast;
    cast = std::clamp<std::size_t>(cast, 1, n);

    std::iota(rows.begin(), rows.end(), std::size_t{0});
    for (std::size_t i = 0; i < cast; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(rows[i], rows[j]);
    }
    std::vector<std::size_t> picked(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(cast));
    std::sort(picked.begin(), picked.end());

    for (std::size_t row : picked) {
      if (open[row] >= 0 && s.spans[static_cast<std::size_t>(open[row])].end_ms == pos) {
        s.spans[static_cast<std::size_t>(open[row])].end_ms = end;
      } else {
        open[row] = static_cast<std::ptrdiff_t>(s.spans.size());
        s.spans.push_back({gallery.ids[row], row, pos, end});
      }
    }
    pos = end;
  }

  std::sort(s.spans.begin(), s.spans.end(), [](const PresenceSpan& a, const PresenceSpan& b) {
    return a.start_ms != b.start_ms ? a.start_ms < b.start_ms : a.gallery_row < b.gallery_row;
  });
  return s;
}

std::vector<std::int64_t> frame_grid(std::int64_t duration_ms, double fps) {
  if (!(fps > 0.0)) fail(ErrorCode::InvalidArgument, "fps must be positive");
  std::vector<std::int64_t> out;
  for (std::int64_t k = 0;; ++k) {
    const std::int64_t t = std::llround(static_cast<double>(k) * 1000.0 / fps);
    if (t >= duration_ms) break;
    if (out.empty() || out.back() != t) out.push_back(t);
  }
  return out;
}

std::vector<DetectionEvent> emit_detections(const SceneSchedule& schedule, const IdentityGallery& gallery,
                                            double fps, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) fail(ErrorCode::InvalidArgument, "noise_sigma must be non-negative");
  const auto grid = frame_grid(schedule.duration_ms, fps);

  struct Slot {
    std::size_t frame;
    std::size_t row;
  };
  std::vector<Slot> slots;
  for (const auto& span : schedule.spans) {
    if (span.gallery_row >= gallery.count()) fail(ErrorCode::InvalidArgument, "span references unknown row");
    auto first = std::lower_bound(grid.begin(), grid.end(), span.start_ms);
    auto last = std::lower_bound(grid.begin(), grid.end(), span.end_ms);
    for (auto it = first; it != last; ++it) slots.push_back({static_cast<std::size_t>(it - grid.begin()), span.gallery_row});
  }
  std::sort(slots.begin(), slots.end(),
            [](const Slot& a, const Slot& b) { return a.frame != b.frame ? a.frame < b.frame : a.row < b.row; });

  Rng rng(seed);
  const std::size_t dim = gallery.dim;
  const double component_sigma = noise_sigma / std::sqrt(static_cast<double>(dim));
  const auto box_steps = static_cast<std::uint64_t>((1.0 - kBoxSide) * 128.0) + 1;
  std::vector<DetectionEvent> events;
  events.reserve(slots.size());
  std::vector<double> v(dim);
  for (const auto& slot : slots) {
    DetectionEvent e;
    e.t_ms = grid[slot.frame];
    e.frame = slot.frame;
    e.true_celebrity_id = gallery.ids[slot.row];
    const auto row = gallery.row(slot.row);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      v[i] = row[i] + component_sigma * rng.normal();
      norm2 += v[i] * v[i];
    }
    if (noise_sigma == 0.0 || norm2 <= 0.0) {
      e.embedding.assign(row.begin(), row.end());
    } else {
      const double norm = std::sqrt(norm2);
      e.embedding.resize(dim);
      for (std::size_t i = 0; i < dim; ++i) e.embedding[i] = static_cast<float>(v[i] / norm);
    }
    const double x = static_cast<double>(rng.below(box_steps)) / 128.0;
    const double y = static_cast<double>(rng.below(box_steps)) / 128.0;
    e.bbox = {x, y, kBoxSide, kBoxSide};
    events.push_back(std::move(e));
  }
  return events;
}

std::map<std::string, std::size_t> expected_counts(const SceneSchedule& schedule, double fps) {
  const auto grid = frame_grid(schedule.duration_ms, fps);
  std::map<std::string, std::size_t> out;
  for (const auto& span : schedule.spans) {
    auto first = std::lower_bound(grid.begin(), grid.end(), span.start_ms);
    auto last = std::lower_bound(grid.begin(), grid.end(), span.end_ms);
    out[span.celebrity_id] += static_cast<std::size_t>(last - first);
  }
  return out;
}

Json schedule_to_json(const SceneSchedule& s) {
  Json spans = Json::array();
  for (const auto& sp : s.spans) {
    spans.push_back({{"celebrity_id", sp.celebrity_id},
                     {"row", sp.gallery_row},
                     {"start_ms", sp.start_ms},
                     {"end_ms", sp.end_ms}});
  }
  return {{"duration_ms", s.duration_ms}, {"scene_starts", s.scene_starts}, {"spans", spans}};
}

SceneSchedule schedule_from_json(const Json& j) {
  try {
    SceneSchedule s;
    s.duration_ms = j.at("duration_ms").get<std::int64_t>();
    s.scene_starts = j.value("scene_starts", std::vector<std::int64_t>{});
    for (const auto& sp : j.at("spans")) {
      s.spans.push_back({sp.at("celebrity_id").get<std::string>(), sp.at("row").get<std::size_t>(),
                         sp.at("start_ms").get<std::int64_t>(), sp.at("end_ms").get<std::int64_t>()});
    }
    return s;
  } catch (const Json::exception& e) {
    fail(ErrorCode::ParseError, std::string("bad schedule JSON: ") + e.what());
  }
}

}  // namespace screenline::synth
