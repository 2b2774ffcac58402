#include "screenline/error.hpp"

namespace screenline {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BadBBox: return "BadBBox";
    case ErrorCode::NegativeScore: return "NegativeScore";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimTooSmall: return "DimTooSmall";
    case ErrorCode::EmptyGallery: return "EmptyGallery";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::ZeroDuration: return "ZeroDuration";
    case ErrorCode::OffsetOverflow: return "OffsetOverflow";
    case ErrorCode::StageFailure: return "StageFailure";
    case ErrorCode::MisalignedStage: return "MisalignedStage";
    case ErrorCode::GalleryDimMismatch: return "GalleryDimMismatch";
    case ErrorCode::OverlappingChunks: return "OverlappingChunks";
    case ErrorCode::MixedEpisodes: return "MixedEpisodes";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::UnknownCelebrity: return "UnknownCelebrity";
    case ErrorCode::EmptyTimeline: return "EmptyTimeline";
    case ErrorCode::AsymmetricInput: return "AsymmetricInput";
    case ErrorCode::MixedSeries: return "MixedSeries";
    case ErrorCode::StorageFull: return "StorageFull";
    case ErrorCode::CorruptSegment: return "CorruptSegment";
    case ErrorCode::UnknownEpisode: return "UnknownEpisode";
    case ErrorCode::MissingCoalesceParams: return "MissingCoalesceParams";
    case ErrorCode::NotProcessed: return "NotProcessed";
  }
  return "Unknown";
}

}  // namespace screenline
