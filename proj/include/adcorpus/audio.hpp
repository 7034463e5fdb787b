#pragma once

#include <cstddef>
#include <filesystem>
#include <utility>
#include <vector>

namespace adcorpus::audio {

/// A sampled waveform with one or two equal-length channels. Amplitudes are
/// normalized floating values, nominally in [-1, 1].
class AudioTrack {
 public:
  AudioTrack() = default;
  AudioTrack(std::vector<std::vector<double>> channels, int sample_rate);

  static AudioTrack mono(std::vector<double> samples, int sample_rate);
  static AudioTrack stereo(std::vector<double> left, std::vector<double> right, int sample_rate);

  int sample_rate() const noexcept { return sample_rate_; }
  std::size_t channels() const noexcept { return channels_.size(); }
  std::size_t frames() const noexcept { return channels_.empty() ? 0 : channels_.front().size(); }
  bool empty() const noexcept { return frames() == 0; }
  double duration_sec() const noexcept {
    return sample_rate_ > 0 ? static_cast<double>(frames()) / sample_rate_ : 0.0;
  }

  const std::vector<double>& channel(std::size_t c) const { return channels_.at(c); }
  const std::vector<std::vector<double>>& data() const noexcept { return channels_; }

 private:
  std::vector<std::vector<double>> channels_;
  int sample_rate_ = 0;
};

/// Per-frame non-negative values on a regular time grid. Frame i is centered
/// at origin_sec + i * hop_sec.
struct Envelope {
  std::vector<double> values;
  double frame_sec = 0.0;
  double hop_sec = 0.0;
  double origin_sec = 0.0;

  double center_sec(std::size_t i) const noexcept { return origin_sec + static_cast<double>(i) * hop_sec; }
};

/// Frame-major magnitude matrix; magnitudes[f * bins + k].
struct Spectrogram {
  std::vector<double> magnitudes;
  std::size_t bins = 0;
  double frame_sec = 0.0;
  double hop_sec = 0.0;
  double origin_sec = 0.0;

  std::size_t frames() const noexcept { return bins == 0 ? 0 : magnitudes.size() / bins; }
  const double* row(std::size_t f) const noexcept { return magnitudes.data() + f * bins; }
};

enum class BitDepth { Pcm16, Float32 };

AudioTrack load_wav(const std::filesystem::path& path);
void write_wav(const AudioTrack& track, const std::filesystem::path& path, BitDepth depth = BitDepth::Pcm16);

/// Stereo is mixed as (L+R)/2; mono input is returned unchanged.
AudioTrack to_mono(const AudioTrack& track);

/// mid = (L+R)/2, side = (L-R)/2. Throws NotStereo.
std::pair<AudioTrack, AudioTrack> mid_side(const AudioTrack& track);

/// Sample-domain framing shared by the envelope and spectrogram.
struct Framing {
  std::size_t frame_len = 0;
  std::size_t hop_len = 0;
  /// Window starts; the last window may be partial.
  std::vector<std::size_t> starts;
};

/// Full windows: floor((N - frame) / hop) + 1. A trailing partial window is
/// kept when at least half a frame of samples remains. A signal shorter than
/// one frame yields a single partial window.
Framing frame_layout(std::size_t n_samples, int sample_rate, double frame_sec, double hop_sec);

/// RMS per window of a mono track.
Envelope energy_envelope(const AudioTrack& track, double frame_sec, double hop_sec);

/// Hann-windowed magnitude spectrum per window; FFT length is the smallest
/// power of two >= the frame length and bins = fft_len / 2 + 1.
Spectrogram spectrogram(const AudioTrack& track, double frame_sec, double hop_sec);

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

}  // namespace adcorpus::audio
