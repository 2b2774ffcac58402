#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "screenline/synthetic.hpp"

namespace screenline {

enum class PayloadType : std::uint8_t { Embedding = 0, Crop = 1 };

/// A face as it arrives in the detection stream: frame-relative box plus
/// either a ready embedding (synthetic mode) or opaque crop bytes.
struct FaceInput {
  std::array<float, 4> bbox{};
  PayloadType payload_type = PayloadType::Embedding;
  std::vector<float> embedding;
  std::vector<std::uint8_t> crop;

  bool operator==(const FaceInput&) const = default;
};

struct Frame {
  std::int64_t t_ms = 0;
  std::vector<FaceInput> faces;

  bool operator==(const Frame&) const = default;
};

// Stream layout (little-endian):
//   "DETS" | u32 version=1 | frames...
//   frame: u64 t_ms | u16 face_count | faces...
//   face:  4 x f32 bbox | u8 payload type | u32 payload length | payload
// Payload length counts f32 values for embeddings and bytes for crops.
std::vector<std::uint8_t> encode_detections(std::span<const Frame> frames);
std::vector<Frame> decode_detections(std::span<const std::uint8_t> bytes);

void write_detections(const std::string& path, std::span<const Frame> frames);
std::vector<Frame> read_detections(const std::string& path);

/// Groups synthetic events (already time-ordered) into frames.
std::vector<Frame> frames_from_events(const std::vector<synth::DetectionEvent>& events);

}  // namespace screenline
