#include "adcorpus/isolate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adcorpus/error.hpp"

namespace adcorpus::isolate {

using audio::AudioTrack;

AudioTrack extract_center(const AudioTrack& stereo, double side_gain) {
  if (side_gain < 0.0) fail(ErrorKind::BadParam, "side_gain must be non-negative");
  auto [mid, side] = audio::mid_side(stereo);
  if (side_gain == 0.0) return mid;
  const auto& m = mid.channel(0);
  const auto& s = side.channel(0);
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double mag = std::max(0.0, std::fabs(m[i]) - side_gain * std::fabs(s[i]));
    out[i] = std::copysign(mag, m[i]);
  }
  return AudioTrack::mono(std::move(out), stereo.sample_rate());
}

AudioTrack nlms_cancel(const AudioTrack& primary, const AudioTrack& reference, const NlmsOptions& opts) {
  if (primary.sample_rate() != reference.sample_rate()) fail(ErrorKind::RateMismatch, "primary and reference rates differ");
  if (primary.channels() != 1 || reference.channels() != 1) fail(ErrorKind::BadParam, "nlms_cancel expects mono tracks");
  if (primary.frames() != reference.frames())
    fail(ErrorKind::LengthMismatch, std::to_string(primary.frames()) + " vs " + std::to_string(reference.frames()) + " samples");
  if (opts.taps < 1) fail(ErrorKind::BadParam, "taps must be >= 1");
  if (!(opts.mu > 0.0 && opts.mu <= 2.0)) fail(ErrorKind::BadParam, "mu must be in (0, 2]");
  if (!(opts.eps > 0.0)) fail(ErrorKind::BadParam, "eps must be positive");

  const auto& d = primary.channel(0);
  const auto& x = reference.channel(0);
  const std::size_t taps = static_cast<std::size_t>(opts.taps);
  const std::size_t n = d.size();

  std::vector<double> w(taps, 0.0);
  // Circular history, newest at `head`; history[(head + k) % taps] = x[n - k].
  std::vector<double> hist(taps, 0.0);
  std::size_t head = 0;
  double power = 0.0;
  std::vector<double> e(n);

  for (std::size_t t = 0; t < n; ++t) {
    head = (head + taps - 1) % taps;
    power -= hist[head] * hist[head];
    hist[head] = x[t];
    power += x[t] * x[t];
    // Re-sum periodically so the running power does not drift.
    if ((t & 0xFFF) == 0) {
      power = 0.0;
      for (const double v : hist) power += v * v;
    }

    double y = 0.0;
    for (std::size_t k = 0, idx = head; k < taps; ++k, idx = (idx + 1 == taps ? 0 : idx + 1)) y += w[k] * hist[idx];
    e[t] = d[t] - y;

    const double g = opts.mu / (opts.eps + std::max(power, 0.0)) * e[t];
    for (std::size_t k = 0, idx = head; k < taps; ++k, idx = (idx + 1 == taps ? 0 : idx + 1)) w[k] += g * hist[idx];
  }
  return AudioTrack::mono(std::move(e), primary.sample_rate());
}

audio::Envelope spectral_difference(const audio::Spectrogram& a, const audio::Spectrogram& b) {
  if (a.bins != b.bins || a.frames() != b.frames() || a.frame_sec != b.frame_sec || a.hop_sec != b.hop_sec ||
      a.origin_sec != b.origin_sec)
    fail(ErrorKind::FramingMismatch, "spectrograms differ in framing or bin count");
  audio::Envelope env;
  env.frame_sec = a.frame_sec;
  env.hop_sec = a.hop_sec;
  env.origin_sec = a.origin_sec;
  env.values.resize(a.frames());
  for (std::size_t f = 0; f < a.frames(); ++f) {
    const double* ra = a.row(f);
    const double* rb = b.row(f);
    double acc = 0.0;
    for (std::size_t k = 0; k < a.bins; ++k) acc += std::fabs(ra[k] - rb[k]);
    env.values[f] = a.bins ? acc / static_cast<double>(a.bins) : 0.0;
  }
  return env;
}

audio::Envelope power_difference(const AudioTrack& primary, const AudioTrack& reference, double frame_sec,
                                 double hop_sec) {
  if (primary.sample_rate() != reference.sample_rate()) fail(ErrorKind::RateMismatch, "primary and reference rates differ");
  if (primary.frames() != reference.frames()) fail(ErrorKind::LengthMismatch, "primary and reference lengths differ");
  auto ep = audio::energy_envelope(primary, frame_sec, hop_sec);
  const auto er = audio::energy_envelope(reference, frame_sec, hop_sec);
  for (std::size_t i = 0; i < ep.values.size(); ++i)
    ep.values[i] = std::max(0.0, ep.values[i] * ep.values[i] - er.values[i] * er.values[i]);
  return ep;
}

}  // namespace adcorpus::isolate
