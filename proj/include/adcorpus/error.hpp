#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace adcorpus {

/// Failure categories raised across the library. The CLI maps each kind to
/// an exit code (see cli::exit_code_for).
enum class ErrorKind {
  Io,
  Format,
  EmptyInput,
  EmptyEnvelope,
  EmptyFile,
  EmptyCorpus,
  RateMismatch,
  LengthMismatch,
  NotStereo,
  LagTooLarge,
  OffsetTooLarge,
  BadParam,
  FramingMismatch,
  NoAnchors,
  ClipLongerThanMovie,
  BadPattern,
  UnassignedMovie,
  AssignmentConflict,
  TooFewClips,
  MissingIds,
  ExtraIds,
  DuplicateIds,
  MalformedJson,
  DimMismatch,
  ZeroVector,
  BadConfig,
  LowConfidence,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace adcorpus
