#include <gtest/gtest.h>

#include <random>

#include "adcorpus/segment.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace adcorpus;
using segment::NarrationSegment;

namespace {

// Frame i covers [i * hop, (i + 1) * hop).
audio::Envelope grid(std::size_t n, double hop = 0.01) {
  audio::Envelope e;
  e.values.assign(n, 0.0);
  e.frame_sec = hop;
  e.hop_sec = hop;
  e.origin_sec = hop / 2;
  return e;
}

void activate(audio::Envelope& e, double from, double to, double level = 1.0) {
  for (std::size_t i = 0; i < e.values.size(); ++i)
    if (e.center_sec(i) > from && e.center_sec(i) < to) e.values[i] = level;
}

}  // namespace

TEST(ThresholdSegments, ShortRunIsDiscarded) {
  auto env = grid(600);
  activate(env, 1.0, 2.5);
  activate(env, 4.0, 4.4);
  const auto segs = segment::threshold_segments(env, 0.5, 1.0, 0.2);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_NEAR(segs[0].start_sec, 1.0, 1e-9);
  EXPECT_NEAR(segs[0].end_sec, 2.5, 1e-9);
  EXPECT_EQ(segs[0].peak_energy, 1.0);
  EXPECT_EQ(segs[0].mean_energy, 1.0);
}

TEST(ThresholdSegments, GapMergeHappensBeforeDiscard) {
  auto env = grid(600);
  activate(env, 1.0, 1.6, 2.0);
  activate(env, 1.8, 2.4, 1.0);
  const auto segs = segment::threshold_segments(env, 0.5, 1.0, 0.3);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_NEAR(segs[0].start_sec, 1.0, 1e-9);
  EXPECT_NEAR(segs[0].end_sec, 2.4, 1e-9);
  EXPECT_EQ(segs[0].peak_energy, 2.0);
  EXPECT_TRUE(segment::threshold_segments(env, 0.5, 1.0, 0.1).empty());
}

TEST(ThresholdSegments, ZeroAndFullEnvelopes) {
  EXPECT_TRUE(segment::threshold_segments(grid(300), 0.1, 1.0, 0.5).empty());
  auto env = grid(300);
  for (auto& v : env.values) v = 0.2;
  const auto segs = segment::threshold_segments(env, 0.1, 1.0, 0.5);
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_NEAR(segs[0].start_sec, 0.0, 1e-12);
  EXPECT_NEAR(segs[0].end_sec, 3.0, 1e-9);
}

TEST(ThresholdSegments, Errors) {
  EXPECT_EQ(adtest::error_kind([] { segment::threshold_segments(audio::Envelope{}, 0.1, 1, 0); }),
            ErrorKind::EmptyEnvelope);
  EXPECT_EQ(adtest::error_kind([] { segment::threshold_segments(grid(5), 0.0, 1, 0); }), ErrorKind::BadParam);
}

TEST(ThresholdSegments, RandomEnvelopeInvariants) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    auto env = grid(400);
    double level = 0.0;
    for (auto& v : env.values) {
      if (u(rng) < 0.05) level = u(rng);
      v = level;
    }
    const double thr = 0.2 + 0.6 * u(rng), min_seg = u(rng), min_gap = 0.5 * u(rng);
    const auto segs = segment::threshold_segments(env, thr, min_seg, min_gap);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      EXPECT_GE(segs[i].start_sec, 0.0);
      EXPECT_LT(segs[i].start_sec, segs[i].end_sec);
      EXPECT_GE(segs[i].duration(), min_seg - 1e-9);
      EXPECT_GT(segs[i].peak_energy, thr);
      EXPECT_LE(segs[i].mean_energy, segs[i].peak_energy + 1e-12);
      if (i > 0) EXPECT_GE(segs[i].start_sec - segs[i - 1].end_sec, min_gap - 1e-9);
    }
    // Raising the threshold never adds coverage when nothing is merged or dropped.
    const auto lo = segment::threshold_segments(env, thr, 0.0, 0.0);
    const auto hi = segment::threshold_segments(env, thr + 0.1, 0.0, 0.0);
    double cov_lo = 0.0, cov_hi = 0.0;
    for (const auto& s : lo) cov_lo += s.duration();
    for (const auto& s : hi) cov_hi += s.duration();
    EXPECT_LE(cov_hi, cov_lo + 1e-9);
  }
}

TEST(AutoThreshold, ConstantAndDegenerate) {
  auto env = grid(50);
  for (auto& v : env.values) v = 0.3;
  const auto c = segment::auto_threshold(env, 0.5, 2.0);
  EXPECT_DOUBLE_EQ(c.value, 0.6);
  EXPECT_FALSE(c.degenerate);

  auto spike = grid(100);
  spike.values.back() = 1.0;
  const auto d = segment::auto_threshold(spike, 0.5, 3.0);
  EXPECT_TRUE(d.degenerate);
  EXPECT_DOUBLE_EQ(d.value, 3.0 * 0.01);
}

TEST(AutoThreshold, MatchesType7Quantile) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int t = 0; t < 50; ++t) {
    auto env = grid(1 + t * 7);
    for (auto& v : env.values) v = u(rng);
    for (double q : {0.1, 0.5, 0.95}) {
      const auto c = segment::auto_threshold(env, q, 3.0);
      EXPECT_NEAR(c.value, 3.0 * oracle::quantile(env.values, q), 1e-12);
    }
  }
}

TEST(PadSegments, Examples) {
  const std::vector<NarrationSegment> one{{10.0, 12.0, 1.0, 1.0}};
  const auto p = segment::pad_segments(one, 2.0, 100.0);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].start_sec, 10.0);
  EXPECT_EQ(p[0].end_sec, 14.0);
  EXPECT_EQ(segment::pad_segments(one, 0.0, 100.0), one);

  const std::vector<NarrationSegment> two{{1.0, 2.0, 0.5, 0.4}, {3.5, 4.0, 0.9, 0.8}};
  const auto m = segment::pad_segments(two, 2.0, 100.0);
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].start_sec, 1.0);
  EXPECT_EQ(m[0].end_sec, 6.0);
  EXPECT_EQ(m[0].peak_energy, 0.9);

  const auto clamped = segment::pad_segments(one, 2.0, 13.0);
  EXPECT_EQ(clamped[0].end_sec, 13.0);
}

namespace {

// Stereo noise movie; the AD mix adds one narration burst to both channels.
struct Pair {
  audio::AudioTrack movie, ad;
};

Pair burst_pair(double t0, double t1, double seconds = 10.0, int rate = 16000) {
  const std::size_t n = static_cast<std::size_t>(seconds * rate);
  const auto c = adtest::white_noise(n, 100), s = adtest::white_noise(n, 101, 0.05);
  const auto v = adtest::white_noise(n, 102);
  std::vector<double> l(n), r(n), al(n), ar(n);
  for (std::size_t i = 0; i < n; ++i) {
    l[i] = c[i] + s[i];
    r[i] = c[i] - s[i];
    const double t = static_cast<double>(i) / rate;
    const double b = t >= t0 && t < t1 ? v[i] : 0.0;
    al[i] = l[i] + b;
    ar[i] = r[i] + b;
  }
  return {audio::AudioTrack::stereo(l, r, rate), audio::AudioTrack::stereo(al, ar, rate)};
}

}  // namespace

TEST(Pipeline, NoNarrationGivesNoSegments) {
  const auto p = burst_pair(0, 0, 6.0);
  EXPECT_TRUE(segment::auto_ad_pipeline(p.movie, p.movie).segments.empty());
  EXPECT_TRUE(segment::semi_auto_pipeline(p.movie, p.movie).segments.empty());
}

TEST(Pipeline, SemiSingleBurstWithinOneFrame) {
  const auto p = burst_pair(4.0, 6.0);
  segment::PipelineConfig cfg;
  cfg.pad_end_sec = 0.0;
  const auto r = segment::semi_auto_pipeline(p.movie, p.ad, cfg);
  ASSERT_EQ(r.segments.size(), 1u);
  EXPECT_NEAR(r.segments[0].start_sec, 4.0, cfg.frame_sec);
  EXPECT_NEAR(r.segments[0].end_sec, 6.0, cfg.frame_sec);
}

TEST(Pipeline, OffsetRobustness) {
  const auto fx = adtest::synthetic_movie();
  const auto r = segment::auto_ad_pipeline(fx.movie, fx.ad_mix);
  EXPECT_EQ(r.offset.offset_samples, 8000);
  ASSERT_EQ(r.segments.size(), fx.bursts.size());
  for (std::size_t i = 0; i < r.segments.size(); ++i) {
    EXPECT_NEAR(r.segments[i].start_sec, fx.bursts[i].start_sec, 0.1);
    EXPECT_NEAR(r.segments[i].end_sec, fx.bursts[i].end_sec + 2.0, 0.1);
  }
}

TEST(Pipeline, ExplicitThresholdBypassesAuto) {
  const auto p = burst_pair(2.0, 4.0, 6.0);
  segment::PipelineConfig cfg;
  cfg.threshold = 1e9;
  const auto r = segment::auto_ad_pipeline(p.movie, p.ad, cfg);
  EXPECT_EQ(r.threshold, 1e9);
  EXPECT_TRUE(r.segments.empty());
}

TEST(Pipeline, RateMismatch) {
  const auto a = audio::AudioTrack::mono(std::vector<double>(100), 8000);
  const auto b = audio::AudioTrack::mono(std::vector<double>(100), 16000);
  EXPECT_EQ(adtest::error_kind([&] { segment::auto_ad_pipeline(a, b); }), ErrorKind::RateMismatch);
}
