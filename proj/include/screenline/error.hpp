#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace screenline {

enum class ErrorCode {
  InvalidArgument,
  IoError,
  // records
  OutOfRange,
  BadBBox,
  NegativeScore,
  ParseError,
  // synthetic source
  DimTooSmall,
  EmptyGallery,
  // vector index
  DimMismatch,
  DuplicateId,
  ZeroVector,
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  ChecksumMismatch,
  CorruptFile,
  // pipeline
  ZeroDuration,
  OffsetOverflow,
  StageFailure,
  MisalignedStage,
  GalleryDimMismatch,
  // aggregation
  OverlappingChunks,
  MixedEpisodes,
  DuplicateKey,
  UnknownCelebrity,
  // analytics
  EmptyTimeline,
  AsymmetricInput,
  MixedSeries,
  // store
  StorageFull,
  CorruptSegment,
  UnknownEpisode,
  MissingCoalesceParams,
  NotProcessed,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Domain error carrying a stable code. Every failure that a caller can act
/// on is reported through this type; anything else is an internal fault.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace screenline
