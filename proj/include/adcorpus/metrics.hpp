#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adcorpus/corpus.hpp"

namespace adcorpus::metrics {

using Sentences = std::vector<std::string>;

// --- BLEU ----------------------------------------------------------------------

/// Corpus-level BLEU-1..max_n with a single reference per hypothesis and no
/// smoothing: any zero n-gram precision zeroes that order and all above it.
/// Element k holds BLEU-(k+1).
std::vector<double> bleu(const Sentences& hypotheses, const Sentences& references, std::size_t max_n = 4);

/// The same definition applied to one pair.
std::vector<double> sentence_bleu(std::string_view hypothesis, std::string_view reference, std::size_t max_n = 4);

// --- ROUGE-L -------------------------------------------------------------------

double rouge_l_pair(std::string_view hypothesis, std::string_view reference, double beta = 1.2);
/// Mean of per-pair LCS F-measures.
double rouge_l(const Sentences& hypotheses, const Sentences& references, double beta = 1.2);

// --- CIDEr ---------------------------------------------------------------------

/// Plain CIDEr: per n in 1..max_n, cosine of tf-idf vectors with
/// idf = log(clips / max(1, df)) and df counted over the references; the
/// per-pair value is 10 * mean over n. Throws TooFewClips below two clips.
std::vector<double> cider_per_pair(const Sentences& hypotheses, const Sentences& references, std::size_t max_n = 4);
double cider(const Sentences& hypotheses, const Sentences& references, std::size_t max_n = 4);

// --- METEOR-lite ---------------------------------------------------------------

struct MeteorDetail {
  std::size_t matches = 0;
  std::size_t exact_matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  double score = 0.0;
};

/// Unigram METEOR restricted to exact and Porter-stem matching (no synonym or
/// paraphrase modules). Exact matches are aligned first, stem matches among
/// the leftovers; each stage maximizes matches, then minimizes chunks.
/// score = Fmean * (1 - 0.5 * (chunks / matches)^3), Fmean = 10PR / (R + 9P).
MeteorDetail meteor_lite_pair(std::string_view hypothesis, std::string_view reference);
double meteor_lite(const Sentences& hypotheses, const Sentences& references);

// --- submissions ---------------------------------------------------------------

struct SentenceScores {
  std::string video_id;
  std::array<double, 4> bleu{};
  double meteor_lite = 0.0;
  double rouge_l = 0.0;
  double cider = 0.0;
};

struct MetricReport {
  std::array<double, 4> bleu{};
  double rouge_l = 0.0;
  double cider = 0.0;
  double meteor_lite = 0.0;
  std::optional<std::vector<SentenceScores>> per_sentence;
};

struct Caption {
  std::string video_id;
  std::string caption;
};

/// Parses a COCO-style array of {"video_id", "caption"}. Numeric ids are
/// accepted and stringified. Throws MalformedJson.
std::vector<Caption> parse_submission(std::string_view json_text);
std::string submission_to_json(const std::vector<Caption>& captions);

/// Scores captions against the reference split (clip_id <-> video_id). The
/// ids must cover the split exactly: DuplicateIds, MissingIds and ExtraIds
/// name the offending ids. Captions are scored as submitted.
MetricReport evaluate_submission(const std::vector<Caption>& submission, const corpus::Corpus& references,
                                 bool per_sentence = false);
MetricReport evaluate_submission(std::string_view submission_json, const corpus::Corpus& references,
                                 bool per_sentence = false);

/// Keys in fixed order: bleu_1..bleu_4, meteor_lite, rouge_l, cider[, per_sentence].
std::string report_to_json(const MetricReport& report);

// --- retrieval -----------------------------------------------------------------

struct FeatureVector {
  std::string id;
  std::vector<double> values;
};

/// JSON Lines of {"id", "values": [...]}.
std::vector<FeatureVector> parse_features_jsonl(std::string_view text);

/// Divides by the sum. Throws ZeroVector, or Format on negative/non-finite
/// values.
std::vector<double> l1_normalize(const std::vector<double>& values);

/// sum_i min(x_i, y_i) of two L1-normalized vectors.
double intersection_similarity(const std::vector<double>& x, const std::vector<double>& y);

struct Retrieved {
  std::string test_id;
  std::string train_id;
  std::string sentence;
  double similarity = 0.0;
};

/// Nearest training clip by intersection similarity of L1-normalized
/// features; ties go to the lexicographically smallest training id.
std::vector<Retrieved> nn_retrieve(const std::vector<FeatureVector>& test, const std::vector<FeatureVector>& train,
                                   const std::map<std::string, std::string>& train_sentences);

using PairMetric = std::function<double(std::string_view hypothesis, std::string_view reference)>;

/// Pairwise METEOR-lite score.
double meteor_lite_score(std::string_view hypothesis, std::string_view reference);

/// Mean over test references of the best pairwise metric against any
/// training sentence (training sentence as hypothesis). Throws EmptyCorpus.
double retrieval_upper_bound(const Sentences& test_references, const Sentences& train_sentences,
                             const PairMetric& metric = meteor_lite_score);

}  // namespace adcorpus::metrics
