#include "adcorpus/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "adcorpus/error.hpp"
#include "adcorpus/text.hpp"

namespace adcorpus::corpus {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON Lines

std::string to_jsonl(const Corpus& corpus, bool include_sentences) {
  std::string out;
  for (const auto& e : corpus) {
    ojson j;
    j["clip_id"] = e.clip_id;
    j["movie_id"] = e.movie_id;
    j["start_sec"] = e.start_sec;
    j["end_sec"] = e.end_sec;
    if (include_sentences) j["sentence"] = e.sentence;
    j["source"] = std::string(textalign::to_string(e.source));
    if (include_sentences && e.score) j["score"] = *e.score;
    if (e.orig_start_sec && e.orig_end_sec) {
      j["orig_start_sec"] = *e.orig_start_sec;
      j["orig_end_sec"] = *e.orig_end_sec;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

Corpus parse_jsonl(std::string_view text) {
  Corpus out;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::MalformedJson, where + ": " + ex.what());
    }
    try {
      CorpusEntry e;
      e.clip_id = j.at("clip_id").get<std::string>();
      e.movie_id = j.at("movie_id").get<std::string>();
      e.start_sec = j.at("start_sec").get<double>();
      e.end_sec = j.at("end_sec").get<double>();
      if (j.contains("sentence")) e.sentence = j["sentence"].get<std::string>();
      e.source = j.contains("source") ? textalign::source_from_string(j["source"].get<std::string>()) : Source::Ad;
      if (j.contains("score") && !j["score"].is_null()) e.score = j["score"].get<double>();
      if (j.contains("orig_start_sec") && j.contains("orig_end_sec")) {
        e.orig_start_sec = j["orig_start_sec"].get<double>();
        e.orig_end_sec = j["orig_end_sec"].get<double>();
      }
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::Format, where + ": " + ex.what());
    }
  }
  return out;
}

void validate(const Corpus& corpus) {
  std::set<std::string> ids;
  for (const auto& e : corpus) {
    if (!ids.insert(e.clip_id).second) fail(ErrorKind::Format, "duplicate clip_id " + e.clip_id);
    if (!(e.start_sec < e.end_sec)) fail(ErrorKind::Format, "clip " + e.clip_id + " has start >= end");
  }
}

// ---------------------------------------------------------------------------
// Clip expansion

namespace {

// Finds an end with end - start == len exactly, nudging by ulps.
std::optional<double> exact_end(double start, double len, double limit) {
  double e = start + len;
  for (int step = 0; step < 8; ++step) {
    for (const double cand : {e, std::nextafter(e, -INFINITY), std::nextafter(e, INFINITY)})
      if (cand - start == len && cand <= limit) return cand;
    e = std::nextafter(e, -INFINITY);
  }
  return std::nullopt;
}

}  // namespace

CorpusEntry expand_clip(const CorpusEntry& entry, double movie_duration_sec, double min_len_sec) {
  if (!(entry.start_sec < entry.end_sec)) fail(ErrorKind::BadParam, "clip " + entry.clip_id + " has start >= end");
  if (entry.end_sec > movie_duration_sec)
    fail(ErrorKind::ClipLongerThanMovie, "clip " + entry.clip_id + " ends after the movie (" +
                                             std::to_string(movie_duration_sec) + " s)");
  const double len = entry.end_sec - entry.start_sec;
  if (len >= min_len_sec) return entry;
  if (min_len_sec > movie_duration_sec)
    fail(ErrorKind::ClipLongerThanMovie, "clip " + entry.clip_id + " cannot be expanded within a movie of " +
                                             std::to_string(movie_duration_sec) + " s");

  const double mid = 0.5 * (entry.start_sec + entry.end_sec);
  double start = std::max(0.0, mid - 0.5 * min_len_sec);
  if (start + min_len_sec > movie_duration_sec) start = std::max(0.0, movie_duration_sec - min_len_sec);

  std::optional<double> end;
  for (int step = 0; step < 16 && !end; ++step) {
    end = exact_end(start, min_len_sec, movie_duration_sec);
    if (!end) start = std::max(0.0, std::nextafter(start, -INFINITY));
  }
  if (!end) fail(ErrorKind::ClipLongerThanMovie, "clip " + entry.clip_id + " cannot be expanded exactly");

  CorpusEntry out = entry;
  if (!out.orig_start_sec || !out.orig_end_sec) {
    out.orig_start_sec = entry.start_sec;
    out.orig_end_sec = entry.end_sec;
  }
  out.start_sec = start;
  out.end_sec = *end;
  return out;
}

// ---------------------------------------------------------------------------
// Anonymization

namespace {

bool word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) != 0;
}

struct Word {
  std::size_t begin;
  std::size_t end;
};

// Words are alphanumeric runs that may contain inner apostrophes or hyphens.
std::vector<Word> find_words(std::string_view s) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!word_byte(s[i])) {
      ++i;
      continue;
    }
    const std::size_t b = i;
    while (i < s.size()) {
      if (word_byte(s[i])) {
        ++i;
      } else if ((s[i] == '\'' || s[i] == '-') && i + 1 < s.size() && word_byte(s[i + 1])) {
        ++i;
      } else {
        break;
      }
    }
    out.push_back({b, i});
  }
  return out;
}

/// Splits a possessive suffix ("'s", "’s" or a trailing "'") from a word.
std::pair<std::string_view, std::string_view> split_possessive(std::string_view w) {
  for (const std::string_view suf : {std::string_view("'s"), std::string_view("\xE2\x80\x99s")})
    if (w.size() > suf.size() && w.ends_with(suf)) return {w.substr(0, w.size() - suf.size()), w.substr(w.size() - suf.size())};
  return {w, {}};
}

struct NameSpan {
  std::size_t begin;
  std::size_t end;  // excluding any possessive suffix
  std::string possessive;
};

enum class Joint { None, Comma, And };

Joint joint_between(std::string_view gap) {
  const std::string g = text::trim(gap);
  if (g == ",") return Joint::Comma;
  if (g == "and" || g == "&" || g == ", and" || g == ",and") return Joint::And;
  // ", and" with odd spacing
  std::string squeezed;
  for (const char c : g)
    if (!std::isspace(static_cast<unsigned char>(c))) squeezed.push_back(c);
  if (squeezed == ",and" || squeezed == ",&") return Joint::And;
  return Joint::None;
}

bool sentence_initial(std::string_view s, std::size_t pos) {
  std::size_t i = pos;
  while (i > 0) {
    const char c = s[i - 1];
    if (std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '(' || c == '[') {
      --i;
      continue;
    }
    if (c == '-' && i >= 2 && s[i - 2] == '-') {
      i -= 2;
      continue;
    }
    return c == '.' || c == '!' || c == '?';
  }
  return true;
}

}  // namespace

NameLexicon::NameLexicon(const std::vector<std::string>& names) {
  for (const auto& n : names) {
    auto words = text::split_whitespace(n);
    if (!words.empty()) names_.push_back(std::move(words));
  }
  std::stable_sort(names_.begin(), names_.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
}

NameLexicon NameLexicon::parse(std::string_view text) {
  std::vector<std::string> names;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    names.push_back(t);
  }
  return NameLexicon(names);
}

std::string anonymize(std::string_view s, const NameLexicon& lexicon) {
  if (lexicon.empty()) return std::string(s);
  const auto words = find_words(s);

  std::vector<NameSpan> spans;
  for (std::size_t w = 0; w < words.size();) {
    bool matched = false;
    for (const auto& name : lexicon.names()) {
      if (w + name.size() > words.size()) continue;
      bool ok = true;
      std::string possessive;
      for (std::size_t k = 0; k < name.size() && ok; ++k) {
        const auto& wd = words[w + k];
        std::string_view token = s.substr(wd.begin, wd.end - wd.begin);
        if (k + 1 == name.size()) {
          const auto [base, suffix] = split_possessive(token);
          if (token != name[k] && base == name[k]) {
            token = base;
            possessive = std::string(suffix);
          }
        } else if (k + 1 < name.size()) {
          // only whitespace may separate the words of a multi-word name
          const auto gap = s.substr(wd.end, words[w + k + 1].begin - wd.end);
          if (!std::all_of(gap.begin(), gap.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
            ok = false;
        }
        if (token != name[k]) ok = false;
      }
      if (!ok) continue;
      const auto& last = words[w + name.size() - 1];
      spans.push_back({words[w].begin, last.end - possessive.size(), possessive});
      w += name.size();
      matched = true;
      break;
    }
    if (!matched) ++w;
  }
  if (spans.empty()) return std::string(s);

  // Chains of names joined by commas or "and"; the members up to the last
  // "and" form a plural group, the rest stay singular.
  struct Replacement {
    std::size_t begin;
    std::size_t end;
    bool plural;
    std::string possessive;
  };
  std::vector<Replacement> reps;
  std::size_t i = 0;
  while (i < spans.size()) {
    std::size_t j = i;
    std::size_t last_and = i;
    while (j + 1 < spans.size() && spans[j].possessive.empty()) {
      const Joint jt = joint_between(s.substr(spans[j].end, spans[j + 1].begin - spans[j].end));
      if (jt == Joint::None) break;
      ++j;
      if (jt == Joint::And) last_and = j;
    }
    if (last_and > i) {
      reps.push_back({spans[i].begin, spans[last_and].end, true, spans[last_and].possessive});
      i = last_and + 1;
    } else {
      reps.push_back({spans[i].begin, spans[i].end, false, spans[i].possessive});
      ++i;
    }
  }

  std::string out;
  std::size_t pos = 0;
  for (const auto& r : reps) {
    out.append(s.substr(pos, r.begin - pos));
    const bool cap = sentence_initial(s, r.begin);
    out += r.plural ? (cap ? "People" : "people") : (cap ? "Someone" : "someone");
    out += r.possessive;
    pos = r.end + r.possessive.size();
  }
  out.append(s.substr(pos));
  return out;
}

// ---------------------------------------------------------------------------
// Non-visual filtering

DropPatterns::DropPatterns(const std::vector<std::string>& patterns) {
  for (const auto& p : patterns) {
    std::string body = p;
    auto flags = std::regex::ECMAScript;
    if (body.starts_with("(?i)")) {
      body.erase(0, 4);
      flags |= std::regex::icase;
    }
    try {
      patterns_.emplace_back(body, flags);
    } catch (const std::regex_error& ex) {
      fail(ErrorKind::BadPattern, "'" + p + "': " + ex.what());
    }
    sources_.push_back(p);
  }
}

DropPatterns DropPatterns::parse(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    lines.push_back(line);
  }
  return DropPatterns(lines);
}

std::optional<std::size_t> DropPatterns::match(std::string_view sentence) const {
  for (std::size_t i = 0; i < patterns_.size(); ++i)
    if (std::regex_search(sentence.begin(), sentence.end(), patterns_[i])) return i;
  return std::nullopt;
}

std::string_view to_string(DropReason r) noexcept { return r == DropReason::IntroOutro ? "intro_outro" : "pattern"; }

FilterResult filter_nonvisual(const Corpus& entries, const std::map<std::string, double>& movie_durations,
                              double intro_outro_sec, const DropPatterns& patterns) {
  FilterResult out;
  for (const auto& e : entries) {
    bool edge = false;
    if (intro_outro_sec > 0.0) {
      edge = e.end_sec <= intro_outro_sec;
      const auto it = movie_durations.find(e.movie_id);
      if (it != movie_durations.end()) edge = edge || e.start_sec >= it->second - intro_outro_sec;
    }
    if (edge)
      out.dropped.push_back({e, DropReason::IntroOutro});
    else if (patterns.match(e.sentence))
      out.dropped.push_back({e, DropReason::Pattern});
    else
      out.kept.push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

Assembled assemble_corpus(std::vector<textalign::AlignedSentence> sentences, const AssembleOptions& opts) {
  std::stable_sort(sentences.begin(), sentences.end(), [](const auto& a, const auto& b) {
    if (a.movie_id != b.movie_id) return a.movie_id < b.movie_id;
    if (a.start_sec != b.start_sec) return a.start_sec < b.start_sec;
    if (a.end_sec != b.end_sec) return a.end_sec < b.end_sec;
    if (a.source != b.source) return a.source < b.source;
    return a.sentence < b.sentence;
  });

  Corpus entries;
  std::map<std::string, std::size_t> per_movie;
  for (const auto& s : sentences) {
    if (s.movie_id.empty()) fail(ErrorKind::Format, "aligned sentence without movie_id");
    char num[16];
    std::snprintf(num, sizeof num, "%04zu", per_movie[s.movie_id]++);
    CorpusEntry e;
    e.clip_id = s.movie_id + "_" + num;
    e.movie_id = s.movie_id;
    e.start_sec = s.start_sec;
    e.end_sec = s.end_sec;
    e.sentence = opts.names.empty() ? s.sentence : anonymize(s.sentence, opts.names);
    e.source = s.source;
    if (s.source == Source::Script) e.score = s.score;
    entries.push_back(std::move(e));
  }

  FilterResult filtered = filter_nonvisual(entries, opts.movie_durations, opts.intro_outro_sec, opts.patterns);
  Assembled out;
  out.dropped = std::move(filtered.dropped);
  for (const auto& e : filtered.kept) {
    const auto it = opts.movie_durations.find(e.movie_id);
    const double dur = it == opts.movie_durations.end() ? std::numeric_limits<double>::infinity() : it->second;
    out.corpus.push_back(expand_clip(e, dur, opts.min_clip_sec));
  }
  validate(out.corpus);
  return out;
}

// ---------------------------------------------------------------------------
// Splits

std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::PublicTest: return "public_test";
    case Split::BlindTest: return "blind_test";
  }
  return "train";
}

Split split_from_string(std::string_view s) {
  for (const Split v : {Split::Train, Split::Val, Split::PublicTest, Split::BlindTest})
    if (to_string(v) == s) return v;
  fail(ErrorKind::Format, "unknown split '" + std::string(s) + "'");
}

Assignment parse_assignment(std::string_view csv) {
  Assignment out;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto comma = t.find(',');
    if (comma == std::string::npos) fail(ErrorKind::Format, "assignment line " + std::to_string(line_no) + ": expected movie_id,split");
    const auto movie = text::trim(t.substr(0, comma));
    const auto split = text::trim(t.substr(comma + 1));
    if (line_no == 1 && movie == "movie_id" && split == "split") continue;
    const Split sp = split_from_string(split);
    if (!out.emplace(movie, sp).second)
      fail(ErrorKind::AssignmentConflict, "movie " + movie + " assigned more than once");
  }
  return out;
}

Splits split_by_movie(const Corpus& corpus, const Assignment& assignment) {
  Splits out;
  for (const auto& e : corpus) {
    const auto it = assignment.find(e.movie_id);
    if (it == assignment.end()) fail(ErrorKind::UnassignedMovie, e.movie_id);
    out[it->second].push_back(e);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats st;
  std::set<std::string> movies;
  for (const auto& e : corpus) {
    movies.insert(e.movie_id);
    st.words += text::split_whitespace(e.sentence).size();
    st.sentences += text::split_sentences(e.sentence).size();
    st.total_sec += e.duration();
    st.total_sec_original += e.original_duration();
  }
  st.movies = movies.size();
  st.clips = corpus.size();
  if (st.clips > 0) {
    st.avg_clip_sec = st.total_sec / static_cast<double>(st.clips);
    st.avg_clip_sec_original = st.total_sec_original / static_cast<double>(st.clips);
  }
  st.total_hours = st.total_sec / 3600.0;
  st.total_hours_original = st.total_sec_original / 3600.0;
  return st;
}

VocabStats vocab_stats(const Corpus& corpus) {
  std::set<std::string> raw, stemmed;
  for (const auto& e : corpus) {
    for (const auto& t : text::tokens(e.sentence)) {
      stemmed.insert(text::porter_stem(t));
      raw.insert(t);
    }
  }
  return {raw.size(), stemmed.size()};
}

DescriptionStats description_stats(const std::vector<std::string>& hypotheses,
                                   const std::vector<std::string>& training_sentences) {
  DescriptionStats st;
  if (hypotheses.empty()) return st;
  std::set<std::string> training;
  for (const auto& t : training_sentences) training.insert(text::normalized(t));

  std::set<std::string> vocab, unique;
  std::size_t words = 0, novel = 0;
  for (const auto& h : hypotheses) {
    words += text::split_whitespace(h).size();
    for (const auto& t : text::tokens(h)) vocab.insert(t);
    const auto key = text::normalized(h);
    unique.insert(key);
    if (!training.contains(key)) ++novel;
  }
  const auto n = static_cast<double>(hypotheses.size());
  st.avg_sentence_length = static_cast<double>(words) / n;
  st.vocab_size = vocab.size();
  st.unique_sentences = unique.size();
  st.pct_novel = 100.0 * static_cast<double>(novel) / n;
  return st;
}

SortKey sort_key_from_string(std::string_view s) {
  if (s == "length_asc") return SortKey::LengthAsc;
  if (s == "word_freq_desc") return SortKey::WordFreqDesc;
  fail(ErrorKind::BadParam, "unknown sort key '" + std::string(s) + "'");
}

std::vector<double> moving_average(const std::vector<double>& values, std::size_t window) {
  if (window == 0) fail(ErrorKind::BadParam, "window must be >= 1");
  const std::size_t left = window / 2, right = (window - 1) / 2;
  std::vector<double> out(values.size());
  // Deviations from the centre sample keep flat stretches and window 1 exact.
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i >= left ? i - left : 0;
    const std::size_t hi = std::min(values.size(), i + right + 1);
    double dev = 0.0;
    for (std::size_t j = lo; j < hi; ++j) dev += values[j] - values[i];
    out[i] = values[i] + dev / static_cast<double>(hi - lo);
  }
  return out;
}

DifficultyCurve difficulty_curve(const std::vector<double>& scores, const std::vector<std::string>& references,
                                 SortKey key, std::size_t window) {
  if (scores.size() != references.size())
    fail(ErrorKind::LengthMismatch, std::to_string(scores.size()) + " scores for " +
                                        std::to_string(references.size()) + " references");
  std::vector<std::vector<std::string>> toks;
  toks.reserve(references.size());
  for (const auto& r : references) toks.push_back(text::tokens(r));

  std::vector<double> sort_value(references.size());
  if (key == SortKey::LengthAsc) {
    for (std::size_t i = 0; i < toks.size(); ++i) sort_value[i] = static_cast<double>(toks[i].size());
  } else {
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& t : toks)
      for (const auto& w : t) ++freq[w];
    for (std::size_t i = 0; i < toks.size(); ++i) {
      double acc = 0.0;
      for (const auto& w : toks[i]) acc += static_cast<double>(freq[w]);
      sort_value[i] = toks[i].empty() ? 0.0 : acc / static_cast<double>(toks[i].size());
    }
  }

  DifficultyCurve c;
  c.order.resize(scores.size());
  std::iota(c.order.begin(), c.order.end(), std::size_t{0});
  std::stable_sort(c.order.begin(), c.order.end(), [&](std::size_t a, std::size_t b) {
    return key == SortKey::LengthAsc ? sort_value[a] < sort_value[b] : sort_value[a] > sort_value[b];
  });
  std::vector<double> reordered;
  reordered.reserve(scores.size());
  for (const auto i : c.order) reordered.push_back(scores[i]);
  c.smoothed = moving_average(reordered, window);
  return c;
}

}  // namespace adcorpus::corpus
