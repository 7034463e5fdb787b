#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "adcorpus/textalign.hpp"

namespace adcorpus::corpus {

using textalign::Source;

/// One aligned (clip interval, sentence) record. orig_* hold the interval
/// before clip expansion, when expansion changed it.
struct CorpusEntry {
  std::string clip_id;
  std::string movie_id;
  double start_sec = 0.0;
  double end_sec = 0.0;
  std::string sentence;
  Source source = Source::Ad;
  std::optional<double> score;
  std::optional<double> orig_start_sec;
  std::optional<double> orig_end_sec;

  double duration() const noexcept { return end_sec - start_sec; }
  double original_duration() const noexcept {
    return orig_start_sec && orig_end_sec ? *orig_end_sec - *orig_start_sec : duration();
  }
  bool operator==(const CorpusEntry&) const = default;
};

using Corpus = std::vector<CorpusEntry>;

// --- serialization ---------------------------------------------------------

/// One JSON object per line. With include_sentences = false the "sentence"
/// and "score" fields are omitted (blind-test release).
std::string to_jsonl(const Corpus& corpus, bool include_sentences = true);
Corpus parse_jsonl(std::string_view text);

/// Throws Format on duplicate clip ids or start >= end.
void validate(const Corpus& corpus);

// --- clip expansion ----------------------------------------------------------

/// Grows a clip shorter than min_len_sec symmetrically to exactly min_len_sec
/// (end - start == min_len_sec in double arithmetic), shifting it back inside
/// [0, movie_duration] when it would cross either bound. Longer clips are
/// returned unchanged. Throws ClipLongerThanMovie when min_len_sec exceeds the
/// movie or the clip ends past it.
CorpusEntry expand_clip(const CorpusEntry& entry, double movie_duration_sec, double min_len_sec = 2.0);

// --- anonymization -----------------------------------------------------------

class NameLexicon {
 public:
  NameLexicon() = default;
  explicit NameLexicon(const std::vector<std::string>& names);
  /// One name per line; blank lines and lines starting with '#' ignored.
  static NameLexicon parse(std::string_view text);

  const std::vector<std::vector<std::string>>& names() const noexcept { return names_; }
  bool empty() const noexcept { return names_.empty(); }

 private:
  std::vector<std::vector<std::string>> names_;  // word sequences, longest first
};

/// Replaces each lexicon name with "someone" and coordinated names
/// ("X and Y", "X, Y and Z") with "people", capitalized at sentence start.
/// A possessive suffix on the last name is kept. Idempotent.
std::string anonymize(std::string_view sentence, const NameLexicon& lexicon);

// --- non-visual filtering ----------------------------------------------------

class DropPatterns {
 public:
  DropPatterns() = default;
  /// ECMAScript regular expressions; a leading "(?i)" makes one
  /// case-insensitive. Throws BadPattern.
  explicit DropPatterns(const std::vector<std::string>& patterns);
  /// One pattern per line; blank lines and lines starting with '#' ignored.
  static DropPatterns parse(std::string_view text);

  /// Index of the first matching pattern.
  std::optional<std::size_t> match(std::string_view sentence) const;
  const std::string& source(std::size_t i) const { return sources_.at(i); }

 private:
  std::vector<std::regex> patterns_;
  std::vector<std::string> sources_;
};

enum class DropReason { IntroOutro, Pattern };
std::string_view to_string(DropReason r) noexcept;

struct Dropped {
  CorpusEntry entry;
  DropReason reason;
};

struct FilterResult {
  Corpus kept;
  std::vector<Dropped> dropped;
};

/// Drops entries lying fully inside the first or last intro_outro_sec of
/// their movie, and entries whose sentence matches a drop pattern. Movies
/// without a known duration only get the intro check.
FilterResult filter_nonvisual(const Corpus& entries, const std::map<std::string, double>& movie_durations,
                              double intro_outro_sec, const DropPatterns& patterns);

// --- assembly ----------------------------------------------------------------

struct AssembleOptions {
  NameLexicon names;
  DropPatterns patterns;
  double intro_outro_sec = 0.0;
  double min_clip_sec = 2.0;
  /// Movies missing here are expanded without an upper clamp.
  std::map<std::string, double> movie_durations;
};

struct Assembled {
  Corpus corpus;
  std::vector<Dropped> dropped;
};

/// Turns aligned sentences into corpus entries: orders them by (movie, start,
/// end, source, sentence), anonymizes, applies filter_nonvisual, expands
/// short clips and numbers clips per movie as "<movie>_<NNNN>". Script
/// sentences keep their reliability score; AD sentences carry none.
Assembled assemble_corpus(std::vector<textalign::AlignedSentence> sentences, const AssembleOptions& opts);

// --- splits ------------------------------------------------------------------

enum class Split { Train, Val, PublicTest, BlindTest };
std::string_view to_string(Split s) noexcept;
Split split_from_string(std::string_view s);

using Assignment = std::map<std::string, Split>;

/// "movie_id,split" per line; an optional "movie_id,split" header is skipped.
/// Throws AssignmentConflict when a movie appears twice.
Assignment parse_assignment(std::string_view csv);

using Splits = std::map<Split, Corpus>;

/// Partitions entries by their movie's split. Throws UnassignedMovie.
Splits split_by_movie(const Corpus& corpus, const Assignment& assignment);

// --- statistics --------------------------------------------------------------

struct CorpusStats {
  std::size_t movies = 0;
  std::size_t words = 0;
  std::size_t sentences = 0;
  std::size_t clips = 0;
  double total_sec = 0.0;
  double total_sec_original = 0.0;
  double avg_clip_sec = 0.0;
  double avg_clip_sec_original = 0.0;
  double total_hours = 0.0;
  double total_hours_original = 0.0;
};

/// Words by whitespace tokenization; sentences by terminal punctuation
/// (at least one per non-empty entry); clips = entries.
CorpusStats corpus_stats(const Corpus& corpus);

struct VocabStats {
  std::size_t vocab_size_raw = 0;
  std::size_t vocab_size_stemmed = 0;
};

VocabStats vocab_stats(const Corpus& corpus);

struct DescriptionStats {
  double avg_sentence_length = 0.0;
  std::size_t vocab_size = 0;
  std::size_t unique_sentences = 0;
  double pct_novel = 0.0;
};

DescriptionStats description_stats(const std::vector<std::string>& hypotheses,
                                   const std::vector<std::string>& training_sentences);

enum class SortKey { LengthAsc, WordFreqDesc };
SortKey sort_key_from_string(std::string_view s);

struct DifficultyCurve {
  std::vector<std::size_t> order;  // indices into the input, in sorted order
  std::vector<double> smoothed;
};

/// Sorts references by key (length ascending, or mean corpus word frequency
/// descending; stable), reorders the scores alike and applies a centered
/// moving average of `window` samples truncated at the edges.
DifficultyCurve difficulty_curve(const std::vector<double>& per_sentence_scores,
                                 const std::vector<std::string>& references, SortKey key, std::size_t window = 500);

/// Centered moving average; for even windows the extra sample is on the left.
std::vector<double> moving_average(const std::vector<double>& values, std::size_t window);

}  // namespace adcorpus::corpus
