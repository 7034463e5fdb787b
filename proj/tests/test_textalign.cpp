#include <gtest/gtest.h>

#include <random>

#include "adcorpus/text.hpp"
#include "adcorpus/textalign.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace adcorpus;
using namespace adcorpus::textalign;

namespace {

ScriptElement dlg(std::string text, std::size_t ordinal, std::string speaker = "TOM") {
  return {ElementKind::Dialogue, std::move(speaker), std::move(text), ordinal};
}

ScriptElement desc(std::string text, std::size_t ordinal) {
  return {ElementKind::Description, std::nullopt, std::move(text), ordinal};
}

}  // namespace

// --- SRT -----------------------------------------------------------------------

TEST(Srt, WellFormedBlock) {
  const auto r = parse_srt("1\n00:00:01,000 --> 00:00:02,500\nHello\n");
  ASSERT_EQ(r.subtitles.size(), 1u);
  EXPECT_EQ(r.subtitles[0], (Subtitle{1, 1.0, 2.5, "Hello"}));
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Srt, TagsBomCrlfAndDotMillis) {
  const auto r = parse_srt("\xEF\xBB\xBF" "1\r\n00:00:01.000 --> 00:00:02.000\r\n<i>Hi</i>\r\n\r\n"
                           "2\r\n00:01:00,250 --> 00:01:01,000\r\n<font color=\"red\">Two</font>\r\nlines\r\n");
  ASSERT_EQ(r.subtitles.size(), 2u);
  EXPECT_EQ(r.subtitles[0].text, "Hi");
  EXPECT_EQ(r.subtitles[1].text, "Two\nlines");
  EXPECT_DOUBLE_EQ(r.subtitles[1].start_sec, 60.25);
}

TEST(Srt, EndBeforeStartIsSkipped) {
  const auto r = parse_srt("1\n00:00:05,000 --> 00:00:04,000\nBad\n\n2\n00:00:06,000 --> 00:00:07,000\nGood\n");
  ASSERT_EQ(r.subtitles.size(), 1u);
  EXPECT_EQ(r.subtitles[0].text, "Good");
  ASSERT_EQ(r.warnings.size(), 1u);
}

TEST(Srt, EmptyFile) {
  EXPECT_EQ(adtest::error_kind([] { parse_srt(""); }), ErrorKind::EmptyFile);
  EXPECT_EQ(adtest::error_kind([] { parse_srt(" \n\n \r\n"); }), ErrorKind::EmptyFile);
}

TEST(Srt, Timecodes) {
  EXPECT_EQ(format_timecode(3723.456), "01:02:03,456");
  EXPECT_EQ(format_timecode(0.0), "00:00:00,000");
  EXPECT_DOUBLE_EQ(*parse_timecode("01:02:03,456"), 3723.456);
  EXPECT_FALSE(parse_timecode("00:61:00,000").has_value());
  EXPECT_FALSE(parse_timecode("00:00:1O,000").has_value());
}

TEST(Srt, SerializeParseRoundTrip) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> ms(0, 5000);
  const std::vector<std::string> lines{"Hello there.", "Where?", "Two\nlines here", "It's late."};
  for (int t = 0; t < 50; ++t) {
    std::vector<Subtitle> subs;
    int clock = 0;
    for (int i = 0; i < 10; ++i) {
      clock += ms(rng);
      const int start = clock;
      clock += 1 + ms(rng);
      subs.push_back({i + 1, start / 1000.0, clock / 1000.0, lines[static_cast<std::size_t>(i) % lines.size()]});
    }
    const auto back = parse_srt(serialize_srt(subs));
    EXPECT_TRUE(back.warnings.empty());
    EXPECT_EQ(back.subtitles, subs);
  }
}

TEST(Srt, RobustnessFixture) {
  const auto r = parse_srt(adtest::slurp(std::filesystem::path(ADCORPUS_FIXTURES) / "robustness.srt"));
  EXPECT_EQ(r.subtitles.size(), 20u);
  EXPECT_EQ(r.warnings.size(), 5u);
  for (std::size_t i = 1; i < r.subtitles.size(); ++i) EXPECT_LT(r.subtitles[i - 1].start_sec, r.subtitles[i].start_sec);
  for (const auto& s : r.subtitles) EXPECT_LT(s.start_sec, s.end_sec);
}

// --- scripts -------------------------------------------------------------------

TEST(Script, SceneHeading) {
  const auto e = parse_script("INT. HOUSE - NIGHT\n");
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].kind, ElementKind::SceneHeading);
  EXPECT_EQ(e[0].text, "INT. HOUSE - NIGHT");
  EXPECT_FALSE(e[0].speaker.has_value());
}

TEST(Script, SpeakerAndDialogue) {
  const auto e = parse_script("JOHN\n    Hello there.\n");
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0], dlg("Hello there.", 0, "JOHN"));
}

TEST(Script, DescriptionSentenceSplit) {
  const auto e = parse_script("He runs. She follows.\n");
  ASSERT_EQ(e.size(), 2u);
  EXPECT_EQ(e[0], desc("He runs.", 0));
  EXPECT_EQ(e[1], desc("She follows.", 1));
}

TEST(Script, SpeakerIffDialogue) {
  const auto e = parse_script(adtest::slurp(std::filesystem::path(ADCORPUS_FIXTURES) / "script.txt"));
  ASSERT_FALSE(e.empty());
  for (std::size_t i = 0; i < e.size(); ++i) {
    EXPECT_EQ(e[i].speaker.has_value(), e[i].kind == ElementKind::Dialogue);
    EXPECT_EQ(e[i].ordinal, i);
  }
}

TEST(Script, EmptyFile) {
  EXPECT_EQ(adtest::error_kind([] { parse_script("\n   \n"); }), ErrorKind::EmptyFile);
}

// --- alignment -----------------------------------------------------------------

TEST(Align, IdenticalStreamsAlignDiagonally) {
  const std::vector<std::string> lines{"where are you going", "to the harbor", "you can't sail tonight", "watch me"};
  std::vector<ScriptElement> d;
  std::vector<Subtitle> s;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    d.push_back(dlg(lines[i], i));
    s.push_back({static_cast<int>(i + 1), i * 2.0, i * 2.0 + 1.0, lines[i]});
  }
  const auto a = align_dialogue(d, s);
  ASSERT_EQ(a.pairs.size(), lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    EXPECT_EQ(a.pairs[i].dialogue_ordinal, i);
    EXPECT_EQ(a.pairs[i].subtitle_pos, i);
    EXPECT_EQ(a.pairs[i].ratio, 1.0);
  }
  EXPECT_DOUBLE_EQ(a.total_score, 4.0);
}

TEST(Align, InsertedSubtitleIsSkipped) {
  const std::vector<std::string> lines{"rope is frozen", "cut it loose", "we are drifting", "hold the wheel",
                                       "i see the light"};
  std::vector<ScriptElement> d;
  std::vector<Subtitle> s;
  for (std::size_t i = 0; i < lines.size(); ++i) d.push_back(dlg(lines[i], i));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i == 2) s.push_back({0, 0, 1, "unrelated chatter noise"});
    s.push_back({0, 0, 1, lines[i]});
  }
  const auto a = align_dialogue(d, s);
  ASSERT_EQ(a.pairs.size(), 5u);
  for (const auto& p : a.pairs) {
    EXPECT_EQ(p.ratio, 1.0);
    EXPECT_NE(p.subtitle_pos, 2u);
  }
  std::vector<std::vector<double>> ratio(5, std::vector<double>(6));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      ratio[i][j] = oracle::match_ratio(text::match_words(d[i].text), text::match_words(s[j].text));
  EXPECT_NEAR(a.total_score, oracle::best_alignment(ratio, 0.1), 1e-12);
}

TEST(Align, DisjointVocabularies) {
  const auto a = align_dialogue({dlg("alpha beta", 0), dlg("gamma", 1)}, {{1, 0, 1, "one two"}, {2, 1, 2, "three"}});
  for (const auto& p : a.pairs) EXPECT_EQ(p.ratio, 0.0);
}

TEST(Align, IgnoresNonDialogueAndRejectsEmpty) {
  const auto a = align_dialogue({desc("nothing here", 0), dlg("hello", 1)}, {{1, 0, 1, "hello"}});
  ASSERT_EQ(a.pairs.size(), 1u);
  EXPECT_EQ(a.pairs[0].dialogue_ordinal, 1u);
  EXPECT_EQ(adtest::error_kind([] { align_dialogue({}, {{1, 0, 1, "x"}}); }), ErrorKind::EmptyInput);
}

TEST(WordMatchRatio, Multiset) {
  EXPECT_DOUBLE_EQ(word_match_ratio("the the cat", "the cat"), 2.0 / 3.0);
  EXPECT_EQ(word_match_ratio("...", "anything"), 0.0);
}

// --- timestamps ----------------------------------------------------------------

namespace {

struct Span {
  std::vector<ScriptElement> script;
  std::vector<Subtitle> subs;
  Alignment alignment;
};

Span span_with(const std::vector<std::string>& descriptions) {
  Span s;
  s.script.push_back(dlg("first line", 0));
  for (const auto& d : descriptions) s.script.push_back(desc(d, s.script.size()));
  s.script.push_back(dlg("second line", s.script.size()));
  s.subs = {{1, 8.0, 10.0, "first line"}, {2, 20.0, 22.0, "second"}};
  s.alignment.pairs = {{0, 0, 1, 0.8}, {s.script.size() - 1, 1, 2, 0.6}};
  return s;
}

}  // namespace

TEST(InferTimestamps, SingleDescriptionFillsSpan) {
  const auto s = span_with({"The door opens."});
  const auto out = infer_timestamps(s.alignment, s.script, s.subs, "m");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].start_sec, 10.0);
  EXPECT_EQ(out[0].end_sec, 20.0);
  EXPECT_NEAR(out[0].score, 0.7, 1e-12);
  EXPECT_EQ(out[0].source, Source::Script);
  EXPECT_EQ(out[0].movie_id, "m");
  EXPECT_EQ(out[0].sentence, "The door opens.");
}

TEST(InferTimestamps, WordCountApportioning) {
  const auto s = span_with({"He runs away.", "She follows him."});
  const auto out = infer_timestamps(s.alignment, s.script, s.subs, "m");
  ASSERT_EQ(out.size(), 2u);
  EXPECT_DOUBLE_EQ(out[0].start_sec, 10.0);
  EXPECT_DOUBLE_EQ(out[0].end_sec, 15.0);
  EXPECT_DOUBLE_EQ(out[1].start_sec, 15.0);
  EXPECT_DOUBLE_EQ(out[1].end_sec, 20.0);

  const auto uneven = span_with({"One.", "Two three four."});
  const auto u = infer_timestamps(uneven.alignment, uneven.script, uneven.subs, "m");
  EXPECT_DOUBLE_EQ(u[0].end_sec, 12.5);
}

TEST(InferTimestamps, NoAnchors) {
  const auto s = span_with({"x"});
  Alignment none;
  EXPECT_EQ(adtest::error_kind([&] { infer_timestamps(none, s.script, s.subs, "m"); }), ErrorKind::NoAnchors);
}

TEST(InferTimestamps, FixtureIntervalsOrderedAndScored) {
  const auto dir = std::filesystem::path(ADCORPUS_FIXTURES);
  const auto script = parse_script(adtest::slurp(dir / "script.txt"));
  const auto subs = parse_srt(adtest::slurp(dir / "robustness.srt")).subtitles;
  const auto out = infer_timestamps(align_dialogue(script, subs), script, subs, "synth");
  ASSERT_FALSE(out.empty());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_LT(out[i].start_sec, out[i].end_sec) << out[i].sentence;
    EXPECT_GE(out[i].score, 0.0);
    EXPECT_LE(out[i].score, 1.0);
    if (i > 0) EXPECT_LE(out[i - 1].end_sec, out[i].start_sec + 1e-9);
  }
}

// --- reliability filter --------------------------------------------------------

TEST(ReliabilityFilter, Examples) {
  std::vector<AlignedSentence> in;
  for (double s : {0.9, 0.5, 0.49}) in.push_back({"s", 0, 1, s, Source::Script, "m"});
  auto [kept, dropped] = reliability_filter(in, 0.5);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].score, 0.9);
  EXPECT_EQ(kept[1].score, 0.5);
  ASSERT_EQ(dropped.size(), 1u);

  std::tie(kept, dropped) = reliability_filter(in, 0.0);
  EXPECT_EQ(kept.size(), 3u);
  std::tie(kept, dropped) = reliability_filter({}, 0.5);
  EXPECT_TRUE(kept.empty() && dropped.empty());
}

TEST(Source, StringRoundTrip) {
  EXPECT_EQ(source_from_string(to_string(Source::Ad)), Source::Ad);
  EXPECT_EQ(source_from_string(to_string(Source::Script)), Source::Script);
  EXPECT_EQ(adtest::error_kind([] { source_from_string("video"); }), ErrorKind::Format);
}
