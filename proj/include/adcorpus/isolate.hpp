#pragma once

#include "adcorpus/audio.hpp"

namespace adcorpus::isolate {

/// Center extraction. Returns the mid channel with its magnitude reduced by
/// side_gain * |side| (sign kept, floored at zero). side_gain = 0 yields the
/// plain mid channel; side-only content (L = -R) always maps to silence.
audio::AudioTrack extract_center(const audio::AudioTrack& stereo, double side_gain = 0.0);

struct NlmsOptions {
  int taps = 64;
  double mu = 0.5;
  double eps = 1e-6;
};

/// Normalized LMS canceller. A causal FIR filter over the last `taps`
/// reference samples predicts the primary; the returned track holds the
/// prediction error e[n] = primary[n] - w . x[n], with
///   w += mu / (eps + |x[n]|^2) * e[n] * x[n]
/// applied after each sample. Weights start at zero; one pass over the track.
audio::AudioTrack nlms_cancel(const audio::AudioTrack& primary, const audio::AudioTrack& reference,
                              const NlmsOptions& opts = {});

/// Per-frame L1 distance between magnitude rows divided by the bin count.
audio::Envelope spectral_difference(const audio::Spectrogram& a, const audio::Spectrogram& b);

/// Energy-domain variant: per-frame mean(primary^2) - mean(reference^2),
/// floored at zero.
audio::Envelope power_difference(const audio::AudioTrack& primary, const audio::AudioTrack& reference,
                                 double frame_sec, double hop_sec);

}  // namespace adcorpus::isolate
