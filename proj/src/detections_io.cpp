#include "screenline/detections_io.hpp"

#include <cstring>
#include <limits>

#include "screenline/binary_io.hpp"
#include "screenline/error.hpp"

namespace screenline {

namespace {
constexpr char kMagic[4] = {'D', 'E', 'T', 'S'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

std::vector<std::uint8_t> encode_detections(std::span<const Frame> frames) {
  ByteWriter w;
  w.bytes(std::string_view(kMagic, 4));
  w.u32(kVersion);
  for (const auto& frame : frames) {
    if (frame.t_ms < 0) fail(ErrorCode::OutOfRange, "negative frame time");
    if (frame.faces.size() > std::numeric_limits<std::uint16_t>::max()) {
      fail(ErrorCode::InvalidArgument, "too many faces in one frame");
    }
    w.u64(static_cast<std::uint64_t>(frame.t_ms));
    w.u16(static_cast<std::uint16_t>(frame.faces.size()));
    for (const auto& face : frame.faces) {
      for (float v : face.bbox) w.f32(v);
      w.u8(static_cast<std::uint8_t>(face.payload_type));
      if (face.payload_type == PayloadType::Embedding) {
        w.u32(static_cast<std::uint32_t>(face.embedding.size()));
        for (float v : face.embedding) w.f32(v);
      } else {
        w.u32(static_cast<std::uint32_t>(face.crop.size()));
        w.bytes(face.crop);
      }
    }
  }
  return std::move(w.buffer());
}

std::vector<Frame> decode_detections(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) fail(ErrorCode::BadMagic, "not a DETS detection stream");
  const std::uint32_t version = r.u32();
  if (version != kVersion) fail(ErrorCode::VersionUnsupported, "detection stream version " + std::to_string(version));

  std::vector<Frame> frames;
  while (!r.at_end()) {
    Frame frame;
    const std::uint64_t t = r.u64();
    if (t > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      fail(ErrorCode::CorruptFile, "frame time out of range");
    }
    frame.t_ms = static_cast<std::int64_t>(t);
    if (!frames.empty() && frame.t_ms < frames.back().t_ms) {
      fail(ErrorCode::CorruptFile, "frames are not in time order");
    }
    const std::uint16_t faces = r.u16();
    frame.faces.resize(faces);
    for (auto& face : frame.faces) {
      for (float& v : face.bbox) v = r.f32();
      const std::uint8_t type = r.u8();
      const std::uint32_t len = r.u32();
      if (type == 0) {
        face.payload_type = PayloadType::Embedding;
        if (static_cast<std::uint64_t>(len) * 4 > r.remaining()) fail(ErrorCode::TruncatedFile, "embedding cut short");
        face.embedding.resize(len);
        for (float& v : face.embedding) v = r.f32();
      } else if (type == 1) {
        face.payload_type = PayloadType::Crop;
        auto crop = r.take(len);
        face.crop.assign(crop.begin(), crop.end());
      } else {
        fail(ErrorCode::CorruptFile, "unknown payload type " + std::to_string(type));
      }
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

void write_detections(const std::string& path, std::span<const Frame> frames) {
  write_file_atomic(path, encode_detections(frames));
}

std::vector<Frame> read_detections(const std::string& path) { return decode_detections(read_file_bytes(path)); }

std::vector<Frame> frames_from_events(const std::vector<synth::DetectionEvent>& events) {
  std::vector<Frame> frames;
  for (const auto& e : events) {
    if (frames.empty() || frames.back().t_ms != e.t_ms) frames.push_back(Frame{e.t_ms, {}});
    FaceInput face;
    for (std::size_t i = 0; i < 4; ++i) face.bbox[i] = static_cast<float>(e.bbox[i]);
    face.payload_type = PayloadType::Embedding;
    face.embedding = e.embedding;
    frames.back().faces.push_back(std::move(face));
  }
  return frames;
}

}  // namespace screenline
