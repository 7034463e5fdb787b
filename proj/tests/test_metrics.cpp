#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "adcorpus/metrics.hpp"
#include "support.hpp"

using namespace adcorpus;
using namespace adcorpus::metrics;

namespace {

// Independent reference formulas over whitespace tokens (fixtures are
// lowercase without punctuation).

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::map<std::vector<std::string>, int> grams(const std::vector<std::string>& w, std::size_t n) {
  std::map<std::vector<std::string>, int> out;
  for (std::size_t i = 0; i + n <= w.size(); ++i) ++out[std::vector<std::string>(w.begin() + i, w.begin() + i + n)];
  return out;
}

double bleu_ref(const Sentences& hyp, const Sentences& ref, std::size_t n_max) {
  double log_p = 0.0;
  std::size_t c = 0, r = 0;
  for (std::size_t n = 1; n <= n_max; ++n) {
    double hit = 0, total = 0;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      const auto h = grams(words(hyp[i]), n), g = grams(words(ref[i]), n);
      for (const auto& [k, v] : h) {
        total += v;
        const auto it = g.find(k);
        if (it != g.end()) hit += std::min(v, it->second);
      }
    }
    if (hit == 0) return 0.0;
    log_p += std::log(hit / total) / static_cast<double>(n_max);
  }
  for (std::size_t i = 0; i < hyp.size(); ++i) {
    c += words(hyp[i]).size();
    r += words(ref[i]).size();
  }
  const double bp = c >= r ? 1.0 : std::exp(1.0 - static_cast<double>(r) / static_cast<double>(c));
  return bp * std::exp(log_p);
}

std::size_t lcs(const std::vector<std::string>& a, const std::vector<std::string>& b, std::size_t i = 0,
                std::size_t j = 0) {
  if (i == a.size() || j == b.size()) return 0;
  if (a[i] == b[j]) return 1 + lcs(a, b, i + 1, j + 1);
  return std::max(lcs(a, b, i + 1, j), lcs(a, b, i, j + 1));
}

double rouge_ref(const std::string& h, const std::string& r) {
  const auto a = words(h), b = words(r);
  const double l = static_cast<double>(lcs(a, b));
  if (l == 0) return 0.0;
  const double p = l / a.size(), rc = l / b.size(), beta2 = 1.2 * 1.2;
  return (1 + beta2) * p * rc / (rc + beta2 * p);
}

double cider_ref(const Sentences& hyp, const Sentences& ref) {
  const double N = static_cast<double>(ref.size());
  double total = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, double> df;
    for (const auto& r : ref)
      for (const auto& [k, v] : grams(words(r), n)) df[k] += 1;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
      auto vec = [&](const std::string& s) {
        std::map<std::vector<std::string>, double> out;
        for (const auto& [k, v] : grams(words(s), n)) out[k] = v * (std::log(N) - std::log(std::max(1.0, df[k])));
        return out;
      };
      const auto h = vec(hyp[i]), r = vec(ref[i]);
      double dot = 0, nh = 0, nr = 0;
      for (const auto& [k, v] : h) {
        nh += v * v;
        const auto it = r.find(k);
        if (it != r.end()) dot += v * it->second;
      }
      for (const auto& [k, v] : r) nr += v * v;
      if (nh > 0 && nr > 0) total += dot / std::sqrt(nh * nr);
    }
  }
  return 10.0 * total / 4.0 / static_cast<double>(hyp.size());
}

std::string random_sentence(std::mt19937_64& rng, int lo = 2, int hi = 9) {
  static const std::vector<std::string> vocab{"man", "woman", "walks", "runs", "door", "opens", "boat", "sea",
                                              "the", "a", "looks", "at", "car", "red", "night", "light"};
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::uniform_int_distribution<int> len(lo, hi);
  std::string s;
  for (int i = len(rng); i > 0; --i) s += (s.empty() ? "" : " ") + vocab[pick(rng)];
  return s;
}

double rouge_pair(std::string_view h, std::string_view r) { return rouge_l_pair(h, r); }

corpus::CorpusEntry ref_entry(std::string id, std::string sentence) {
  corpus::CorpusEntry e;
  e.clip_id = std::move(id);
  e.movie_id = "m";
  e.start_sec = 0;
  e.end_sec = 2;
  e.sentence = std::move(sentence);
  return e;
}

}  // namespace

// --- BLEU ----------------------------------------------------------------------

TEST(Bleu, HandFixtures) {
  const auto id = bleu({"a b c d"}, {"a b c d"});
  for (double v : id) EXPECT_EQ(v, 1.0);
  EXPECT_NEAR(bleu({"the cat"}, {"the cat sat on the mat"})[0], std::exp(-2.0), 1e-12);
  for (double v : bleu({"x y z"}, {"a b c"})) EXPECT_EQ(v, 0.0);
  // bigram precision 1, no trigram: BLEU-2 > 0, BLEU-3 = 0 without smoothing
  const auto s = bleu({"a b"}, {"a b c"});
  EXPECT_NEAR(s[1], std::exp(-0.5), 1e-12);
  EXPECT_EQ(s[2], 0.0);
}

TEST(Bleu, MatchesReferenceFormula) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    Sentences h, r;
    for (int i = 0; i < 6; ++i) {
      h.push_back(random_sentence(rng));
      r.push_back(random_sentence(rng));
    }
    const auto got = bleu(h, r);
    for (std::size_t n = 1; n <= 4; ++n) EXPECT_NEAR(got[n - 1], bleu_ref(h, r, n), 1e-12);
  }
}

TEST(Bleu, Errors) {
  EXPECT_EQ(adtest::error_kind([] { bleu({"a"}, {"a", "b"}); }), ErrorKind::LengthMismatch);
  EXPECT_EQ(adtest::error_kind([] { bleu({}, {}); }), ErrorKind::EmptyCorpus);
}

// --- ROUGE-L -------------------------------------------------------------------

TEST(RougeL, HandFixtures) {
  EXPECT_EQ(rouge_l_pair("a b c", "a b c"), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l_pair("a b c d", "a c b d"), 0.75);
  EXPECT_EQ(rouge_l_pair("a b", "c d"), 0.0);
}

TEST(RougeL, MatchesReferenceFormula) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    const auto h = random_sentence(rng), r = random_sentence(rng);
    EXPECT_NEAR(rouge_l_pair(h, r), rouge_ref(h, r), 1e-12) << h << " | " << r;
  }
}

// --- CIDEr ---------------------------------------------------------------------

TEST(Cider, HandFixtures) {
  EXPECT_NEAR(cider({"a man walks home", "the dog barks loudly"}, {"a man walks home", "the dog barks loudly"}), 10.0,
              1e-12);
  // Three-word sentences have no 4-grams, so that order contributes nothing.
  EXPECT_NEAR(cider({"a man walks", "the dog barks"}, {"a man walks", "the dog barks"}), 7.5, 1e-12);
  EXPECT_EQ(cider({"x y", "z w"}, {"a b", "c d"}), 0.0);
  EXPECT_EQ(adtest::error_kind([] { cider({"a"}, {"a"}); }), ErrorKind::TooFewClips);
}

TEST(Cider, MatchesReferenceFormula) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 30; ++t) {
    Sentences h, r;
    for (int i = 0; i < 8; ++i) {
      h.push_back(random_sentence(rng));
      r.push_back(random_sentence(rng));
    }
    EXPECT_NEAR(cider(h, r), cider_ref(h, r), 1e-9);
  }
}

// --- METEOR-lite ---------------------------------------------------------------

TEST(MeteorLite, HandFixtures) {
  const auto d = meteor_lite_pair("a man opens doors", "a man opens doors");
  EXPECT_EQ(d.matches, 4u);
  EXPECT_EQ(d.chunks, 1u);
  EXPECT_EQ(d.fmean, 1.0);
  EXPECT_EQ(d.penalty, 0.5 / 64);
  EXPECT_EQ(d.score, 0.9921875);
  EXPECT_EQ(meteor_lite_pair("x y", "a b").score, 0.0);

  const auto stem = meteor_lite_pair("runs", "running");
  EXPECT_EQ(stem.matches, 1u);
  EXPECT_EQ(stem.exact_matches, 0u);

  // m = 3, P = 1, R = 1/2, one chunk
  const auto p = meteor_lite_pair("the cat sat", "the cat sat on the mat");
  const double f = 10 * 1.0 * 0.5 / (0.5 + 9 * 1.0);
  EXPECT_NEAR(p.score, f * (1 - 0.5 / 27), 1e-12);
}

TEST(MeteorLite, FewerChunksPreferred) {
  // "the" can align to either occurrence; the contiguous choice gives 1 chunk.
  const auto d = meteor_lite_pair("the cat", "the dog saw the cat");
  EXPECT_EQ(d.matches, 2u);
  EXPECT_EQ(d.chunks, 1u);
}

TEST(MeteorLite, LongIdentitiesScoreHigh) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto s = random_sentence(rng, 4, 12);
    EXPECT_GE(meteor_lite({s}, {s}), 0.99) << s;
  }
}

// --- shared properties ---------------------------------------------------------

TEST(Metrics, RangesAndOrderInvariance) {
  std::mt19937_64 rng(5);
  Sentences h, r;
  for (int i = 0; i < 12; ++i) {
    h.push_back(random_sentence(rng));
    r.push_back(i % 3 == 0 ? h.back() : random_sentence(rng));
  }
  const auto b = bleu(h, r);
  const double rl = rouge_l(h, r), me = meteor_lite(h, r), ci = cider(h, r);
  for (double v : b) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_GE(rl, 0.0);
  EXPECT_LE(rl, 1.0);
  EXPECT_GE(me, 0.0);
  EXPECT_LE(me, 1.0);
  EXPECT_GE(ci, 0.0);

  std::vector<std::size_t> perm(h.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < 5; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Sentences h2, r2;
    for (auto i : perm) {
      h2.push_back(h[i]);
      r2.push_back(r[i]);
    }
    const auto b2 = bleu(h2, r2);
    for (std::size_t n = 0; n < 4; ++n) EXPECT_NEAR(b2[n], b[n], 1e-12);
    EXPECT_NEAR(rouge_l(h2, r2), rl, 1e-12);
    EXPECT_NEAR(meteor_lite(h2, r2), me, 1e-12);
    EXPECT_NEAR(cider(h2, r2), ci, 1e-9);
  }
}

// --- submissions ---------------------------------------------------------------

TEST(Submission, IdentityScoresPerfect) {
  const corpus::Corpus refs{ref_entry("c1", "A man opens the door."), ref_entry("c2", "The boat drifts at night."),
                            ref_entry("c3", "She looks at the red car.")};
  std::vector<Caption> sub;
  for (const auto& r : refs) sub.push_back({r.clip_id, r.sentence});
  const auto rep = evaluate_submission(sub, refs, true);
  for (double v : rep.bleu) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(rep.rouge_l, 1.0);
  EXPECT_GE(rep.meteor_lite, 0.99);
  ASSERT_TRUE(rep.per_sentence.has_value());
  EXPECT_EQ(rep.per_sentence->size(), 3u);

  const auto json = report_to_json(rep);
  EXPECT_LT(json.find("bleu_1"), json.find("meteor_lite"));
  EXPECT_LT(json.find("meteor_lite"), json.find("rouge_l"));
  EXPECT_LT(json.find("rouge_l"), json.find("\"cider\""));
}

TEST(Submission, IdErrors) {
  const corpus::Corpus refs{ref_entry("c1", "one"), ref_entry("c2", "two")};
  try {
    evaluate_submission(std::vector<Caption>{{"c1", "one"}}, refs);
    FAIL() << "expected MissingIds";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingIds);
    EXPECT_NE(std::string(e.what()).find("c2"), std::string::npos);
  }
  EXPECT_EQ(adtest::error_kind([&] {
              evaluate_submission(std::vector<Caption>{{"c1", "a"}, {"c1", "b"}, {"c2", "c"}}, refs);
            }),
            ErrorKind::DuplicateIds);
  EXPECT_EQ(adtest::error_kind([&] {
              evaluate_submission(std::vector<Caption>{{"c1", "a"}, {"c2", "b"}, {"c9", "c"}}, refs);
            }),
            ErrorKind::ExtraIds);
  EXPECT_EQ(adtest::error_kind([&] { evaluate_submission(std::string_view("[{\"video_id\": 1}]"), refs); }),
            ErrorKind::MalformedJson);
  EXPECT_EQ(adtest::error_kind([&] { evaluate_submission(std::string_view("{"), refs); }), ErrorKind::MalformedJson);
}

TEST(Submission, JsonRoundTrip) {
  const std::vector<Caption> caps{{"7", "Someone waves."}, {"clip_2", "A \"quoted\" word."}};
  const auto back = parse_submission(submission_to_json(caps));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].caption, caps[1].caption);
  EXPECT_EQ(parse_submission("[{\"video_id\": 7, \"caption\": \"x\"}]")[0].video_id, "7");
}

// --- retrieval -----------------------------------------------------------------

TEST(Retrieval, NormalizeAndIntersection) {
  const auto n = l1_normalize({1, 3});
  EXPECT_EQ(n, (std::vector<double>{0.25, 0.75}));
  EXPECT_EQ(intersection_similarity(l1_normalize({1, 0}), l1_normalize({0, 2})), 0.0);
  EXPECT_EQ(adtest::error_kind([] { l1_normalize({0, 0}); }), ErrorKind::ZeroVector);
  EXPECT_EQ(adtest::error_kind([] { intersection_similarity({1}, {1, 2}); }), ErrorKind::DimMismatch);
  EXPECT_EQ(adtest::error_kind([] { l1_normalize({-1, 2}); }), ErrorKind::Format);
}

TEST(Retrieval, IdentityAndBruteForceArgmax) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0), scale(0.1, 50.0);
  std::vector<FeatureVector> train, test;
  std::map<std::string, std::string> sents;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> v(8);
    for (auto& x : v) x = u(rng);
    train.push_back({"t" + std::to_string(100 + i), v});
    sents[train.back().id] = "sentence " + std::to_string(i);
  }
  test.push_back({"q0", train[7].values});
  for (int i = 1; i < 15; ++i) {
    std::vector<double> v(8);
    for (auto& x : v) x = u(rng);
    test.push_back({"q" + std::to_string(i), v});
  }
  const auto got = nn_retrieve(test, train, sents);
  ASSERT_EQ(got.size(), test.size());
  EXPECT_EQ(got[0].train_id, "t107");
  EXPECT_NEAR(got[0].similarity, 1.0, 1e-12);

  for (std::size_t q = 0; q < test.size(); ++q) {
    double best = -1;
    std::string arg;
    for (const auto& t : train) {
      double s = 0, a = 0, b = 0;
      for (std::size_t k = 0; k < 8; ++k) {
        a += test[q].values[k];
        b += t.values[k];
      }
      for (std::size_t k = 0; k < 8; ++k) s += std::min(test[q].values[k] / a, t.values[k] / b);
      if (s > best + 1e-12) {
        best = s;
        arg = t.id;
      }
    }
    EXPECT_EQ(got[q].train_id, arg);
    EXPECT_EQ(got[q].sentence, sents[arg]);
  }

  // Positive scaling of any single vector leaves the argmax alone.
  auto scaled_test = test;
  auto scaled_train = train;
  for (auto& f : scaled_test)
    for (double s = scale(rng); auto& x : f.values) x *= s;
  for (auto& f : scaled_train)
    for (double s = scale(rng); auto& x : f.values) x *= s;
  const auto again = nn_retrieve(scaled_test, scaled_train, sents);
  for (std::size_t q = 0; q < got.size(); ++q) EXPECT_EQ(again[q].train_id, got[q].train_id);
}

TEST(Retrieval, FeatureJsonl) {
  const auto f = parse_features_jsonl("{\"id\": \"a\", \"values\": [1, 2.5]}\n\n{\"id\": 3, \"values\": []}\n");
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[1].id, "3");
  EXPECT_EQ(f[0].values, (std::vector<double>{1, 2.5}));
  EXPECT_EQ(adtest::error_kind([] { parse_features_jsonl("{\"id\": \"a\"}\n"); }), ErrorKind::MalformedJson);
}

TEST(UpperBound, Examples) {
  const Sentences test{"a man opens the door slowly", "the boat drifts"};
  const double ub = retrieval_upper_bound(test, {"something else entirely", "a man opens the door slowly"});
  EXPECT_GE(ub, 0.5 * 0.99);

  const Sentences single{"the boat drifts at night"};
  const double mean = (meteor_lite_score(single[0], test[0]) + meteor_lite_score(single[0], test[1])) / 2;
  EXPECT_NEAR(retrieval_upper_bound(test, single), mean, 1e-12);
  EXPECT_NEAR(retrieval_upper_bound(test, single, rouge_pair), (rouge_l_pair(single[0], test[0]) +
                                                                   rouge_l_pair(single[0], test[1])) / 2, 1e-12);
  EXPECT_EQ(adtest::error_kind([&] { retrieval_upper_bound(test, {}); }), ErrorKind::EmptyCorpus);
}

TEST(UpperBound, DominatesNearestNeighbour) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    std::vector<FeatureVector> train, test;
    std::map<std::string, std::string> sents;
    Sentences train_list, refs;
    for (int i = 0; i < 15; ++i) {
      std::vector<double> v(6);
      for (auto& x : v) x = u(rng);
      train.push_back({"t" + std::to_string(i), v});
      sents[train.back().id] = random_sentence(rng);
    }
    for (const auto& [id, s] : sents) train_list.push_back(s);
    for (int i = 0; i < 8; ++i) {
      std::vector<double> v(6);
      for (auto& x : v) x = u(rng);
      test.push_back({"q" + std::to_string(i), v});
      refs.push_back(random_sentence(rng));
    }
    const auto got = nn_retrieve(test, train, sents);
    for (const PairMetric& m : {PairMetric(meteor_lite_score), PairMetric(rouge_pair)}) {
      double nn = 0;
      for (std::size_t i = 0; i < got.size(); ++i) nn += m(got[i].sentence, refs[i]);
      EXPECT_GE(retrieval_upper_bound(refs, train_list, m), nn / static_cast<double>(got.size()) - 1e-12);
    }
  }
}
