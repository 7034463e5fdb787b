#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace adcorpus::textalign {

// ---------------------------------------------------------------------------
// Subtitles

struct Subtitle {
  int index = 0;
  double start_sec = 0.0;
  double end_sec = 0.0;
  std::string text;

  bool operator==(const Subtitle&) const = default;
};

struct SrtParse {
  std::vector<Subtitle> subtitles;
  /// One entry per skipped block, e.g. "block 4 (line 17): end before start".
  std::vector<std::string> warnings;
};

/// Parses SubRip text. Accepts a UTF-8 BOM, CRLF line ends and '.' as the
/// millisecond separator. Tags of the form <...> are stripped from the text;
/// multi-line text is joined with '\n'. Malformed blocks are skipped with a
/// warning. Throws EmptyFile when the input holds no blocks at all.
SrtParse parse_srt(std::string_view text);

std::string serialize_srt(const std::vector<Subtitle>& subs);

/// "HH:MM:SS,mmm"
std::string format_timecode(double seconds);
std::optional<double> parse_timecode(std::string_view s);

// ---------------------------------------------------------------------------
// Scripts

enum class ElementKind { SceneHeading, Dialogue, Description };

std::string_view to_string(ElementKind k) noexcept;

struct ScriptElement {
  ElementKind kind = ElementKind::Description;
  std::optional<std::string> speaker;
  std::string text;
  std::size_t ordinal = 0;

  bool operator==(const ScriptElement&) const = default;
};

struct ScriptFormatHints {
  /// Minimum leading whitespace of dialogue lines. Negative: anything deeper
  /// than the shallowest non-blank line of the script.
  int dialogue_min_indent = -1;
  /// Line prefixes marking scene headings (matched case-sensitively after
  /// trimming).
  std::vector<std::string> scene_prefixes{"INT.", "EXT.", "INT/EXT", "I/E", "EST."};
  /// Drop all-caps transition lines such as "CUT TO:" or "FADE IN:".
  bool drop_transitions = true;
  /// Tab stop used when measuring indentation.
  int tab_width = 8;
};

/// Classifies lines: scene-heading prefixes; an all-caps cue followed by an
/// indented block is a speaker with dialogue (parenthetical lines inside the
/// block are dropped); everything else is description, merged per paragraph
/// and split into sentences.
std::vector<ScriptElement> parse_script(std::string_view text, const ScriptFormatHints& hints = {});

// ---------------------------------------------------------------------------
// Alignment

struct AlignParams {
  /// Penalty per skipped dialogue or subtitle.
  double gap = 0.1;
};

struct AlignedPair {
  std::size_t dialogue_ordinal = 0;  // ScriptElement::ordinal
  std::size_t subtitle_pos = 0;      // position in the subtitle list
  int subtitle_index = 0;            // Subtitle::index
  double ratio = 0.0;                // matched words / dialogue words
};

struct Alignment {
  std::vector<AlignedPair> pairs;
  double total_score = 0.0;
};

/// |multiset intersection of match_words| / |dialogue words|; 0 for a
/// dialogue without words.
double word_match_ratio(std::string_view dialogue, std::string_view subtitle);

/// Global monotone alignment maximizing sum(pair ratio) - gap * (skipped
/// dialogues + skipped subtitles). Non-dialogue elements in the input are
/// ignored. Throws EmptyInput when either side is empty.
Alignment align_dialogue(const std::vector<ScriptElement>& dialogues, const std::vector<Subtitle>& subs,
                         const AlignParams& params = {});

enum class Source { Ad, Script };

std::string_view to_string(Source s) noexcept;
Source source_from_string(std::string_view s);

struct AlignedSentence {
  std::string sentence;
  double start_sec = 0.0;
  double end_sec = 0.0;
  double score = 0.0;
  Source source = Source::Script;
  std::string movie_id;

  bool operator==(const AlignedSentence&) const = default;
};

struct InferParams {
  /// Span given to descriptions before the first or after the last anchor.
  double edge_span_sec = 5.0;
};

/// Interpolates times for every description element between its neighboring
/// anchors (pairs with a positive ratio), splitting the span between the
/// preceding anchor's subtitle end and the following anchor's subtitle start
/// in proportion to word counts. The score is the mean ratio of the two
/// anchors, or the single anchor's ratio at the edges. Throws NoAnchors.
std::vector<AlignedSentence> infer_timestamps(const Alignment& alignment, const std::vector<ScriptElement>& script,
                                              const std::vector<Subtitle>& subs, const std::string& movie_id,
                                              const InferParams& params = {});

/// kept: score >= min_score, order preserved.
std::pair<std::vector<AlignedSentence>, std::vector<AlignedSentence>> reliability_filter(
    const std::vector<AlignedSentence>& sentences, double min_score = 0.5);

}  // namespace adcorpus::textalign
