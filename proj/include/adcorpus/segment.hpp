#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adcorpus/audio.hpp"
#include "adcorpus/isolate.hpp"
#include "adcorpus/sync.hpp"

namespace adcorpus::segment {

/// A detected narration interval in seconds from the track origin.
struct NarrationSegment {
  double start_sec = 0.0;
  double end_sec = 0.0;
  double peak_energy = 0.0;
  double mean_energy = 0.0;

  double duration() const noexcept { return end_sec - start_sec; }
  bool operator==(const NarrationSegment&) const = default;
};

/// Frames strictly above `threshold` are active. Frame i owns the interval
/// center(i) +/- hop/2. Active runs whose gap is shorter than min_gap_sec
/// are merged first, then runs shorter than min_seg_sec are dropped.
std::vector<NarrationSegment> threshold_segments(const audio::Envelope& env, double threshold, double min_seg_sec,
                                                 double min_gap_sec);

struct ThresholdChoice {
  double value = 0.0;
  /// The quantile was zero and the factor * mean fallback was used.
  bool degenerate = false;
};

/// factor * quantile(values) with linear interpolation between order
/// statistics. Falls back to factor * mean when the quantile is zero.
ThresholdChoice auto_threshold(const audio::Envelope& env, double quantile, double factor);

/// Extends each end by pad_end_sec (clamped to the track duration) and merges
/// segments that come to overlap or touch.
std::vector<NarrationSegment> pad_segments(const std::vector<NarrationSegment>& segs, double pad_end_sec,
                                           double track_duration_sec);

struct PipelineConfig {
  double frame_sec = 0.05;
  double hop_sec = 0.01;
  sync::SyncOptions sync;
  double side_gain = 0.0;
  isolate::NlmsOptions nlms;
  /// A positive value bypasses auto_threshold.
  double threshold = 0.0;
  double quantile = 0.5;
  double factor = 3.0;
  /// Lower bound applied to the automatic threshold.
  double threshold_floor = 1e-4;
  double min_seg_sec = 1.0;
  double min_gap_sec = 0.5;
  double pad_end_sec = 2.0;
};

struct PipelineResult {
  std::vector<NarrationSegment> segments;
  sync::OffsetEstimate offset;
  double threshold = 0.0;
  std::vector<std::string> warnings;
};

/// Fully automatic path: center extraction, offset alignment of the AD mix to
/// the movie timeline, NLMS cancellation of the movie audio, envelope
/// thresholding and end padding. Segment times are on the movie timeline.
PipelineResult auto_ad_pipeline(const audio::AudioTrack& movie, const audio::AudioTrack& ad_mix,
                                const PipelineConfig& cfg = {});
PipelineResult auto_ad_pipeline(const std::filesystem::path& movie_wav, const std::filesystem::path& ad_wav,
                                const PipelineConfig& cfg = {});

/// Semi-automatic path: spectrogram difference between the movie and the
/// aligned AD mix replaces the NLMS residual.
PipelineResult semi_auto_pipeline(const audio::AudioTrack& movie, const audio::AudioTrack& ad_mix,
                                  const PipelineConfig& cfg = {});
PipelineResult semi_auto_pipeline(const std::filesystem::path& movie_wav, const std::filesystem::path& ad_wav,
                                  const PipelineConfig& cfg = {});

}  // namespace adcorpus::segment
