#include "adcorpus/segment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "adcorpus/error.hpp"

namespace adcorpus::segment {

namespace {

// Durations built from frame counts carry rounding noise.
constexpr double kTimeEps = 1e-9;

struct Run {
  std::size_t first;
  std::size_t last;  // inclusive
};

}  // namespace

std::vector<NarrationSegment> threshold_segments(const audio::Envelope& env, double threshold, double min_seg_sec,
                                                 double min_gap_sec) {
  if (env.values.empty()) fail(ErrorKind::EmptyEnvelope, "no frames");
  if (!(threshold > 0.0)) fail(ErrorKind::BadParam, "threshold must be positive");
  if (min_seg_sec < 0.0 || min_gap_sec < 0.0) fail(ErrorKind::BadParam, "min_seg_sec and min_gap_sec must be >= 0");

  std::vector<Run> runs;
  for (std::size_t i = 0; i < env.values.size(); ++i) {
    if (!(env.values[i] > threshold)) continue;
    if (!runs.empty() && runs.back().last + 1 == i)
      runs.back().last = i;
    else
      runs.push_back({i, i});
  }

  std::vector<Run> merged;
  for (const Run& r : runs) {
    if (!merged.empty()) {
      const double gap = static_cast<double>(r.first - merged.back().last - 1) * env.hop_sec;
      if (gap < min_gap_sec - kTimeEps) {
        merged.back().last = r.last;
        continue;
      }
    }
    merged.push_back(r);
  }

  std::vector<NarrationSegment> out;
  for (const Run& r : merged) {
    const double len = static_cast<double>(r.last - r.first + 1) * env.hop_sec;
    if (len < min_seg_sec - kTimeEps) continue;
    NarrationSegment s;
    s.start_sec = std::max(0.0, env.center_sec(r.first) - 0.5 * env.hop_sec);
    s.end_sec = env.center_sec(r.last) + 0.5 * env.hop_sec;
    double sum = 0.0;
    for (std::size_t i = r.first; i <= r.last; ++i) {
      s.peak_energy = std::max(s.peak_energy, env.values[i]);
      sum += env.values[i];
    }
    s.mean_energy = sum / static_cast<double>(r.last - r.first + 1);
    out.push_back(s);
  }
  return out;
}

ThresholdChoice auto_threshold(const audio::Envelope& env, double quantile, double factor) {
  if (env.values.empty()) fail(ErrorKind::EmptyEnvelope, "no frames");
  if (!(quantile > 0.0 && quantile < 1.0)) fail(ErrorKind::BadParam, "quantile must be in (0, 1)");
  if (!(factor > 0.0)) fail(ErrorKind::BadParam, "factor must be positive");

  std::vector<double> v = env.values;
  std::sort(v.begin(), v.end());
  const double pos = quantile * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double q = v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);

  if (q > 0.0) return {factor * q, false};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return {factor * mean, true};
}

std::vector<NarrationSegment> pad_segments(const std::vector<NarrationSegment>& segs, double pad_end_sec,
                                           double track_duration_sec) {
  std::vector<NarrationSegment> out;
  std::vector<double> weight;  // unpadded duration, for merging mean energies
  for (const auto& s : segs) {
    NarrationSegment p = s;
    p.end_sec = std::min(track_duration_sec, s.end_sec + pad_end_sec);
    p.end_sec = std::max(p.end_sec, s.end_sec);
    if (!out.empty() && p.start_sec <= out.back().end_sec) {
      auto& q = out.back();
      const double w0 = weight.back(), w1 = s.duration();
      q.end_sec = std::max(q.end_sec, p.end_sec);
      q.peak_energy = std::max(q.peak_energy, p.peak_energy);
      if (w0 + w1 > 0.0) q.mean_energy = (q.mean_energy * w0 + p.mean_energy * w1) / (w0 + w1);
      weight.back() = w0 + w1;
      continue;
    }
    out.push_back(p);
    weight.push_back(s.duration());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

audio::AudioTrack isolate_vocals(const audio::AudioTrack& t, double side_gain) {
  return t.channels() == 2 ? isolate::extract_center(t, side_gain) : t;
}

struct Aligned {
  audio::AudioTrack track;  // AD mix on the movie timeline, movie length
  std::size_t valid_begin = 0;
  std::size_t valid_end = 0;
};

Aligned align_to_movie(const audio::AudioTrack& movie, const audio::AudioTrack& ad, std::int64_t offset) {
  const auto shifted = sync::apply_offset(ad, -offset);
  std::vector<double> s = shifted.channel(0);
  s.resize(movie.frames(), 0.0);

  const auto n_movie = static_cast<std::int64_t>(movie.frames());
  const auto n_ad = static_cast<std::int64_t>(ad.frames());
  Aligned a{audio::AudioTrack::mono(std::move(s), movie.sample_rate())};
  a.valid_begin = static_cast<std::size_t>(std::clamp<std::int64_t>(-offset, 0, n_movie));
  a.valid_end = static_cast<std::size_t>(std::clamp<std::int64_t>(n_ad - offset, 0, n_movie));
  a.valid_end = std::max(a.valid_end, a.valid_begin);
  return a;
}

sync::OffsetEstimate estimate(const audio::AudioTrack& movie, const audio::AudioTrack& ad, const PipelineConfig& cfg,
                              std::vector<std::string>& warnings) {
  auto est = sync::estimate_offset(movie, ad, cfg.sync);
  if (est.low_confidence) {
    std::ostringstream os;
    os << "LowConfidence: offset " << est.offset_samples << " samples has secondary ratio " << est.secondary_ratio
       << " < " << cfg.sync.low_confidence_ratio;
    warnings.push_back(os.str());
  }
  return est;
}

// Frames touching samples outside [begin, end) carry no usable comparison.
void mask_frames(audio::Envelope& env, int rate, std::size_t begin, std::size_t end) {
  for (std::size_t i = 0; i < env.values.size(); ++i) {
    const double c = env.center_sec(i) * rate;
    const double half = 0.5 * env.frame_sec * rate;
    if (c - half < static_cast<double>(begin) - 0.5 || c + half > static_cast<double>(end) + 0.5) env.values[i] = 0.0;
  }
}

PipelineResult finish(audio::Envelope env, double duration_sec, const PipelineConfig& cfg, PipelineResult result) {
  if (cfg.threshold > 0.0) {
    result.threshold = cfg.threshold;
  } else {
    const auto choice = auto_threshold(env, cfg.quantile, cfg.factor);
    if (choice.degenerate)
      result.warnings.push_back("DegenerateThreshold: quantile is zero, using factor * mean");
    result.threshold = std::max(choice.value, cfg.threshold_floor);
  }
  const auto raw = threshold_segments(env, result.threshold, cfg.min_seg_sec, cfg.min_gap_sec);
  result.segments = pad_segments(raw, cfg.pad_end_sec, duration_sec);
  return result;
}

}  // namespace

PipelineResult auto_ad_pipeline(const audio::AudioTrack& movie, const audio::AudioTrack& ad_mix,
                                const PipelineConfig& cfg) {
  if (movie.sample_rate() != ad_mix.sample_rate()) fail(ErrorKind::RateMismatch, "movie and AD tracks differ in rate");
  PipelineResult result;
  const auto m = isolate_vocals(movie, cfg.side_gain);
  const auto a = isolate_vocals(ad_mix, cfg.side_gain);
  result.offset = estimate(m, a, cfg, result.warnings);

  const Aligned aligned = align_to_movie(m, a, result.offset.offset_samples);
  const auto residual = isolate::nlms_cancel(aligned.track, m, cfg.nlms);
  std::vector<double> r = residual.channel(0);
  std::fill(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(aligned.valid_begin), 0.0);
  std::fill(r.begin() + static_cast<std::ptrdiff_t>(aligned.valid_end), r.end(), 0.0);

  auto env = audio::energy_envelope(audio::AudioTrack::mono(std::move(r), movie.sample_rate()), cfg.frame_sec,
                                    cfg.hop_sec);
  return finish(std::move(env), movie.duration_sec(), cfg, std::move(result));
}

PipelineResult auto_ad_pipeline(const std::filesystem::path& movie_wav, const std::filesystem::path& ad_wav,
                                const PipelineConfig& cfg) {
  return auto_ad_pipeline(audio::load_wav(movie_wav), audio::load_wav(ad_wav), cfg);
}

PipelineResult semi_auto_pipeline(const audio::AudioTrack& movie, const audio::AudioTrack& ad_mix,
                                  const PipelineConfig& cfg) {
  if (movie.sample_rate() != ad_mix.sample_rate()) fail(ErrorKind::RateMismatch, "movie and AD tracks differ in rate");
  PipelineResult result;
  const auto m = audio::to_mono(movie);
  const auto a = audio::to_mono(ad_mix);
  result.offset = estimate(m, a, cfg, result.warnings);

  const Aligned aligned = align_to_movie(m, a, result.offset.offset_samples);
  const auto sm = audio::spectrogram(m, cfg.frame_sec, cfg.hop_sec);
  const auto sa = audio::spectrogram(aligned.track, cfg.frame_sec, cfg.hop_sec);
  auto env = isolate::spectral_difference(sm, sa);
  mask_frames(env, movie.sample_rate(), aligned.valid_begin, aligned.valid_end);
  return finish(std::move(env), movie.duration_sec(), cfg, std::move(result));
}

PipelineResult semi_auto_pipeline(const std::filesystem::path& movie_wav, const std::filesystem::path& ad_wav,
                                  const PipelineConfig& cfg) {
  return semi_auto_pipeline(audio::load_wav(movie_wav), audio::load_wav(ad_wav), cfg);
}

}  // namespace adcorpus::segment
