#include "adcorpus/sync.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "adcorpus/error.hpp"
#include "adcorpus/fft.hpp"

namespace adcorpus::sync {

std::vector<double> normalized_xcorr(std::span<const double> a, std::span<const double> b, std::size_t max_lag) {
  const std::size_t na = a.size(), nb = b.size();
  if (na == 0 || nb == 0) fail(ErrorKind::EmptyInput, "cross-correlation of an empty signal");
  if (max_lag >= std::min(na, nb)) fail(ErrorKind::LagTooLarge, "max lag must be shorter than both signals");

  const std::size_t n = fft::next_pow2(na + nb - 1);
  auto fa = fft::real_forward(a, n);
  const auto fb = fft::real_forward(b, n);
  for (std::size_t i = 0; i < n; ++i) fa[i] = std::conj(fa[i]) * fb[i];
  fft::inverse(fa);

  // prefix sums of squares for the overlap norms
  std::vector<double> ca(na + 1, 0.0), cb(nb + 1, 0.0);
  for (std::size_t i = 0; i < na; ++i) ca[i + 1] = ca[i] + a[i] * a[i];
  for (std::size_t i = 0; i < nb; ++i) cb[i + 1] = cb[i] + b[i] * b[i];

  const auto L = static_cast<std::int64_t>(max_lag);
  std::vector<double> out(2 * max_lag + 1, 0.0);
  for (std::int64_t k = -L; k <= L; ++k) {
    // overlap: n in [lo, hi) with 0 <= n < na and 0 <= n + k < nb
    const std::int64_t lo = std::max<std::int64_t>(0, -k);
    const std::int64_t hi = std::min<std::int64_t>(static_cast<std::int64_t>(na), static_cast<std::int64_t>(nb) - k);
    double value = 0.0;
    if (hi > lo) {
      const double ea = ca[hi] - ca[lo];
      const double eb = cb[hi + k] - cb[lo + k];
      const double den = std::sqrt(ea * eb);
      if (den > 0.0) {
        const double raw = fa[static_cast<std::size_t>((k + static_cast<std::int64_t>(n)) % static_cast<std::int64_t>(n))].real();
        value = std::clamp(raw / den, -1.0, 1.0);
      }
    }
    out[static_cast<std::size_t>(k + L)] = value;
  }
  return out;
}

OffsetEstimate estimate_offset(const audio::AudioTrack& a, const audio::AudioTrack& b, const SyncOptions& opts) {
  if (a.sample_rate() != b.sample_rate())
    fail(ErrorKind::RateMismatch,
         std::to_string(a.sample_rate()) + " Hz vs " + std::to_string(b.sample_rate()) + " Hz");
  if (a.empty() || b.empty()) fail(ErrorKind::EmptyInput, "offset estimation on an empty track");
  if (a.channels() != 1 || b.channels() != 1) fail(ErrorKind::BadParam, "offset estimation expects mono tracks");
  if (!(opts.max_lag_sec >= 0.0)) fail(ErrorKind::BadParam, "max_lag_sec must be non-negative");

  const auto max_lag = static_cast<std::size_t>(std::llround(opts.max_lag_sec * a.sample_rate()));
  if (max_lag >= std::min(a.frames(), b.frames()))
    fail(ErrorKind::LagTooLarge, "max lag of " + std::to_string(max_lag) + " samples exceeds track length");

  const auto curve = normalized_xcorr(a.channel(0), b.channel(0), max_lag);
  const auto L = static_cast<std::int64_t>(max_lag);
  auto at = [&](std::int64_t lag) { return curve[static_cast<std::size_t>(lag + L)]; };

  // Scan by increasing |lag| so that ties keep the smaller magnitude.
  std::int64_t best = 0;
  for (std::int64_t m = 1; m <= L; ++m) {
    if (at(-m) > at(best)) best = -m;
    if (at(m) > at(best)) best = m;
  }

  double second = -std::numeric_limits<double>::infinity();
  for (std::int64_t k = -L; k <= L; ++k) {
    if (k == best) continue;
    const double v = at(k);
    const bool left_ok = k == -L || v >= at(k - 1);
    const bool right_ok = k == L || v > at(k + 1);
    if (left_ok && right_ok) second = std::max(second, v);
  }

  OffsetEstimate est;
  est.offset_samples = best;
  est.peak_correlation = at(best);
  if (est.peak_correlation <= 0.0)
    est.secondary_ratio = 1.0;
  else if (second > 0.0)
    est.secondary_ratio = std::max(1.0, est.peak_correlation / second);
  else
    est.secondary_ratio = std::numeric_limits<double>::infinity();
  est.low_confidence = est.secondary_ratio < opts.low_confidence_ratio;
  return est;
}

audio::AudioTrack apply_offset(const audio::AudioTrack& track, std::int64_t offset) {
  const auto n = static_cast<std::int64_t>(track.frames());
  if (offset == 0) return track;
  if (std::llabs(offset) >= n)
    fail(ErrorKind::OffsetTooLarge, "offset " + std::to_string(offset) + " for a track of " + std::to_string(n) + " samples");

  std::vector<std::vector<double>> out;
  for (const auto& ch : track.data()) {
    std::vector<double> shifted(ch.size(), 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
      const std::int64_t src = i - offset;
      if (src >= 0 && src < n) shifted[static_cast<std::size_t>(i)] = ch[static_cast<std::size_t>(src)];
    }
    out.push_back(std::move(shifted));
  }
  return audio::AudioTrack(std::move(out), track.sample_rate());
}

}  // namespace adcorpus::sync
