#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "adcorpus/audio.hpp"

namespace adcorpus::sync {

/// Lag of track b relative to track a: b[n + offset] ~ a[n].
struct OffsetEstimate {
  std::int64_t offset_samples = 0;
  double peak_correlation = 0.0;
  /// Peak over the second-highest local maximum of the correlation curve;
  /// +inf when no other positive local maximum exists.
  double secondary_ratio = 0.0;
  bool low_confidence = false;
};

struct SyncOptions {
  double max_lag_sec = 2.0;
  double low_confidence_ratio = 1.2;
};

/// Normalized cross-correlation for lags -max_lag..max_lag (index = lag +
/// max_lag). Each lag divides sum(a[n] * b[n + lag]) by the L2 norms of the
/// overlapping parts of a and b; a lag with zero overlap energy scores 0.
/// Computed with one zero-padded FFT product.
std::vector<double> normalized_xcorr(std::span<const double> a, std::span<const double> b, std::size_t max_lag);

OffsetEstimate estimate_offset(const audio::AudioTrack& a, const audio::AudioTrack& b, const SyncOptions& opts = {});

/// Positive offsets prepend zeros and drop the tail; negative offsets drop the
/// head and append zeros. Length is preserved.
audio::AudioTrack apply_offset(const audio::AudioTrack& track, std::int64_t offset_samples);

}  // namespace adcorpus::sync
