#include "adcorpus/error.hpp"

namespace adcorpus {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::EmptyEnvelope: return "EmptyEnvelope";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::RateMismatch: return "RateMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::NotStereo: return "NotStereo";
    case ErrorKind::LagTooLarge: return "LagTooLarge";
    case ErrorKind::OffsetTooLarge: return "OffsetTooLarge";
    case ErrorKind::BadParam: return "BadParam";
    case ErrorKind::FramingMismatch: return "FramingMismatch";
    case ErrorKind::NoAnchors: return "NoAnchors";
    case ErrorKind::ClipLongerThanMovie: return "ClipLongerThanMovie";
    case ErrorKind::BadPattern: return "BadPattern";
    case ErrorKind::UnassignedMovie: return "UnassignedMovie";
    case ErrorKind::AssignmentConflict: return "AssignmentConflict";
    case ErrorKind::TooFewClips: return "TooFewClips";
    case ErrorKind::MissingIds: return "MissingIds";
    case ErrorKind::ExtraIds: return "ExtraIds";
    case ErrorKind::DuplicateIds: return "DuplicateIds";
    case ErrorKind::MalformedJson: return "MalformedJson";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::LowConfidence: return "LowConfidence";
  }
  return "Error";
}

}  // namespace adcorpus
