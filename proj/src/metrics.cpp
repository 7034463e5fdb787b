#include "adcorpus/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adcorpus/error.hpp"
#include "adcorpus/text.hpp"

namespace adcorpus::metrics {

using ojson = nlohmann::ordered_json;
using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::string, std::size_t>;

namespace {

void check_pairs(const Sentences& h, const Sentences& r) {
  if (h.size() != r.size())
    fail(ErrorKind::LengthMismatch, std::to_string(h.size()) + " hypotheses vs " + std::to_string(r.size()) + " references");
}

NgramCounts ngrams(const Tokens& t, std::size_t n) {
  NgramCounts out;
  if (t.size() < n) return out;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    std::string key = t[i];
    for (std::size_t k = 1; k < n; ++k) {
      key.push_back('\x1f');
      key += t[i + k];
    }
    ++out[key];
  }
  return out;
}

struct BleuStats {
  std::vector<std::size_t> matched;
  std::vector<std::size_t> total;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
};

void accumulate(BleuStats& st, const Tokens& h, const Tokens& r) {
  st.hyp_len += h.size();
  st.ref_len += r.size();
  for (std::size_t n = 1; n <= st.total.size(); ++n) {
    const auto hc = ngrams(h, n);
    const auto rc = ngrams(r, n);
    for (const auto& [g, c] : hc) {
      st.total[n - 1] += c;
      const auto it = rc.find(g);
      if (it != rc.end()) st.matched[n - 1] += std::min(c, it->second);
    }
  }
}

std::vector<double> finish(const BleuStats& st) {
  const std::size_t max_n = st.total.size();
  std::vector<double> out(max_n, 0.0);
  if (st.hyp_len == 0) return out;
  const double c = static_cast<double>(st.hyp_len), r = static_cast<double>(st.ref_len);
  const double bp = std::min(1.0, std::exp(1.0 - r / c));
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= max_n; ++n) {
    if (st.matched[n - 1] == 0 || st.total[n - 1] == 0) break;  // this and all higher orders stay 0
    log_sum += std::log(static_cast<double>(st.matched[n - 1]) / static_cast<double>(st.total[n - 1]));
    out[n - 1] = bp * std::exp(log_sum / static_cast<double>(n));
  }
  return out;
}

}  // namespace

std::vector<double> bleu(const Sentences& hypotheses, const Sentences& references, std::size_t max_n) {
  check_pairs(hypotheses, references);
  if (hypotheses.empty()) fail(ErrorKind::EmptyCorpus, "BLEU over zero sentences");
  if (max_n == 0) fail(ErrorKind::BadParam, "max_n must be >= 1");
  BleuStats st{std::vector<std::size_t>(max_n, 0), std::vector<std::size_t>(max_n, 0)};
  for (std::size_t i = 0; i < hypotheses.size(); ++i)
    accumulate(st, text::tokens(hypotheses[i]), text::tokens(references[i]));
  return finish(st);
}

std::vector<double> sentence_bleu(std::string_view hypothesis, std::string_view reference, std::size_t max_n) {
  if (max_n == 0) fail(ErrorKind::BadParam, "max_n must be >= 1");
  BleuStats st{std::vector<std::size_t>(max_n, 0), std::vector<std::size_t>(max_n, 0)};
  accumulate(st, text::tokens(hypothesis), text::tokens(reference));
  return finish(st);
}

// ---------------------------------------------------------------------------
// ROUGE-L

namespace {

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

double rouge_l_pair(std::string_view hypothesis, std::string_view reference, double beta) {
  const auto h = text::tokens(hypothesis);
  const auto r = text::tokens(reference);
  if (h.empty() || r.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(h, r));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(h.size());
  const double rc = lcs / static_cast<double>(r.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * rc / (rc + b2 * p);
}

double rouge_l(const Sentences& hypotheses, const Sentences& references, double beta) {
  check_pairs(hypotheses, references);
  if (hypotheses.empty()) fail(ErrorKind::EmptyCorpus, "ROUGE-L over zero sentences");
  double acc = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) acc += rouge_l_pair(hypotheses[i], references[i], beta);
  return acc / static_cast<double>(hypotheses.size());
}

// ---------------------------------------------------------------------------
// CIDEr

std::vector<double> cider_per_pair(const Sentences& hypotheses, const Sentences& references, std::size_t max_n) {
  check_pairs(hypotheses, references);
  if (hypotheses.size() < 2) fail(ErrorKind::TooFewClips, "CIDEr needs at least two clips for idf");
  const std::size_t clips = references.size();

  std::vector<std::vector<NgramCounts>> hc(clips), rc(clips);
  std::vector<std::map<std::string, std::size_t>> df(max_n);
  for (std::size_t i = 0; i < clips; ++i) {
    const auto ht = text::tokens(hypotheses[i]);
    const auto rt = text::tokens(references[i]);
    for (std::size_t n = 1; n <= max_n; ++n) {
      hc[i].push_back(ngrams(ht, n));
      rc[i].push_back(ngrams(rt, n));
      for (const auto& [g, c] : rc[i].back()) ++df[n - 1][g];
    }
  }

  const double log_clips = std::log(static_cast<double>(clips));
  auto idf = [&](std::size_t n, const std::string& g) {
    const auto it = df[n].find(g);
    const double d = it == df[n].end() ? 1.0 : static_cast<double>(it->second);
    return log_clips - std::log(std::max(1.0, d));
  };

  std::vector<double> out(clips, 0.0);
  for (std::size_t i = 0; i < clips; ++i) {
    double sum = 0.0;
    for (std::size_t n = 0; n < max_n; ++n) {
      double dot = 0.0, nh = 0.0, nr = 0.0;
      for (const auto& [g, c] : hc[i][n]) {
        const double v = static_cast<double>(c) * idf(n, g);
        nh += v * v;
        const auto it = rc[i][n].find(g);
        if (it != rc[i][n].end()) dot += v * static_cast<double>(it->second) * idf(n, g);
      }
      for (const auto& [g, c] : rc[i][n]) {
        const double v = static_cast<double>(c) * idf(n, g);
        nr += v * v;
      }
      if (nh > 0.0 && nr > 0.0) sum += dot / (std::sqrt(nh) * std::sqrt(nr));
    }
    out[i] = 10.0 * sum / static_cast<double>(max_n);
  }
  return out;
}

double cider(const Sentences& hypotheses, const Sentences& references, std::size_t max_n) {
  const auto per = cider_per_pair(hypotheses, references, max_n);
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
}

// ---------------------------------------------------------------------------
// METEOR-lite

namespace {

struct Link {
  std::size_t h;
  std::size_t r;
};

std::size_t count_chunks(std::vector<Link> links) {
  if (links.empty()) return 0;
  std::sort(links.begin(), links.end(), [](const Link& a, const Link& b) { return a.h < b.h; });
  std::size_t chunks = 1;
  for (std::size_t i = 1; i < links.size(); ++i)
    if (links[i].h != links[i - 1].h + 1 || links[i].r != links[i - 1].r + 1) ++chunks;
  return chunks;
}

/// One matching stage: among free positions, link equal keys so that the
/// number of links is maximal and the chunk count of fixed + new links is
/// minimal. Depth-first over hypothesis positions; the first leaf is the
/// greedy left-to-right alignment, so an exhausted node budget still returns
/// a maximal matching.
class StageSearch {
 public:
  StageSearch(const Tokens& hkeys, const Tokens& rkeys, std::vector<bool> hfree, std::vector<bool> rfree,
              std::vector<Link> fixed)
      : hkeys_(hkeys), rkeys_(rkeys), hfree_(std::move(hfree)), rfree_(std::move(rfree)), fixed_(std::move(fixed)) {
    std::map<std::string, std::size_t> hcount, rcount;
    for (std::size_t i = 0; i < hkeys_.size(); ++i)
      if (hfree_[i]) ++hcount[hkeys_[i]];
    for (std::size_t j = 0; j < rkeys_.size(); ++j)
      if (rfree_[j]) ++rcount[rkeys_[j]];
    for (const auto& [k, c] : hcount) {
      const auto it = rcount.find(k);
      if (it != rcount.end()) quota_[k] = std::min(c, it->second);
    }
    hremaining_ = hcount;
  }

  std::vector<Link> run() {
    std::vector<Link> current = fixed_;
    dfs(0, current);
    std::vector<Link> added(best_.begin() + static_cast<std::ptrdiff_t>(fixed_.size()), best_.end());
    return added;
  }

 private:
  static constexpr std::size_t kNodeBudget = 200000;

  const Tokens& hkeys_;
  const Tokens& rkeys_;
  std::vector<bool> hfree_;
  std::vector<bool> rfree_;
  std::vector<Link> fixed_;
  std::map<std::string, std::size_t> quota_;
  std::map<std::string, std::size_t> hremaining_;
  std::vector<Link> best_;
  std::size_t best_chunks_ = std::numeric_limits<std::size_t>::max();
  std::size_t nodes_ = 0;

  // Chunks among links with h < pos; a lower bound for any completion.
  std::size_t prefix_chunks(const std::vector<Link>& links, std::size_t pos) const {
    std::vector<Link> pre;
    for (const auto& l : links)
      if (l.h < pos) pre.push_back(l);
    return count_chunks(std::move(pre));
  }

  void dfs(std::size_t pos, std::vector<Link>& links) {
    if (++nodes_ > kNodeBudget && !best_.empty()) return;
    if (prefix_chunks(links, pos) >= best_chunks_) return;
    while (pos < hkeys_.size() && (!hfree_[pos] || !quota_.contains(hkeys_[pos]))) ++pos;
    if (pos >= hkeys_.size()) {
      const std::size_t c = count_chunks(links);
      if (c < best_chunks_) {
        best_chunks_ = c;
        best_ = links;
      }
      return;
    }
    const std::string& key = hkeys_[pos];
    auto& quota = quota_[key];
    auto& remaining = hremaining_[key];
    --remaining;
    if (quota > 0) {
      for (std::size_t j = 0; j < rkeys_.size(); ++j) {
        if (!rfree_[j] || rkeys_[j] != key) continue;
        rfree_[j] = false;
        --quota;
        links.push_back({pos, j});
        dfs(pos + 1, links);
        links.pop_back();
        ++quota;
        rfree_[j] = true;
      }
    }
    if (remaining >= quota) dfs(pos + 1, links);
    ++remaining;
  }
};

}  // namespace

MeteorDetail meteor_lite_pair(std::string_view hypothesis, std::string_view reference) {
  const auto h = text::tokens(hypothesis);
  const auto r = text::tokens(reference);
  MeteorDetail d;
  if (h.empty() || r.empty()) return d;

  std::vector<Link> links =
      StageSearch(h, r, std::vector<bool>(h.size(), true), std::vector<bool>(r.size(), true), {}).run();
  d.exact_matches = links.size();

  std::vector<bool> hfree(h.size(), true), rfree(r.size(), true);
  for (const auto& l : links) {
    hfree[l.h] = false;
    rfree[l.r] = false;
  }
  Tokens hs, rs;
  for (const auto& t : h) hs.push_back(text::porter_stem(t));
  for (const auto& t : r) rs.push_back(text::porter_stem(t));
  const auto stem_links = StageSearch(hs, rs, hfree, rfree, links).run();
  links.insert(links.end(), stem_links.begin(), stem_links.end());

  d.matches = links.size();
  if (d.matches == 0) return d;
  d.chunks = count_chunks(links);
  const double m = static_cast<double>(d.matches);
  d.precision = m / static_cast<double>(h.size());
  d.recall = m / static_cast<double>(r.size());
  d.fmean = 10.0 * d.precision * d.recall / (d.recall + 9.0 * d.precision);
  d.penalty = 0.5 * std::pow(static_cast<double>(d.chunks) / m, 3.0);
  d.score = d.fmean * (1.0 - d.penalty);
  return d;
}

double meteor_lite_score(std::string_view hypothesis, std::string_view reference) {
  return meteor_lite_pair(hypothesis, reference).score;
}

double meteor_lite(const Sentences& hypotheses, const Sentences& references) {
  check_pairs(hypotheses, references);
  if (hypotheses.empty()) fail(ErrorKind::EmptyCorpus, "METEOR-lite over zero sentences");
  double acc = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) acc += meteor_lite_score(hypotheses[i], references[i]);
  return acc / static_cast<double>(hypotheses.size());
}

// ---------------------------------------------------------------------------
// Submissions

std::vector<Caption> parse_submission(std::string_view json_text) {
  ojson j;
  try {
    j = ojson::parse(json_text);
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::MalformedJson, ex.what());
  }
  if (!j.is_array()) fail(ErrorKind::MalformedJson, "submission must be a JSON array");
  std::vector<Caption> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& item = j[i];
    const std::string where = "submission item " + std::to_string(i);
    if (!item.is_object() || !item.contains("video_id") || !item.contains("caption"))
      fail(ErrorKind::MalformedJson, where + " needs video_id and caption");
    const auto& id = item["video_id"];
    Caption c;
    if (id.is_string())
      c.video_id = id.get<std::string>();
    else if (id.is_number_integer())
      c.video_id = std::to_string(id.get<long long>());
    else
      fail(ErrorKind::MalformedJson, where + ": video_id must be a string or integer");
    if (!item["caption"].is_string()) fail(ErrorKind::MalformedJson, where + ": caption must be a string");
    c.caption = item["caption"].get<std::string>();
    out.push_back(std::move(c));
  }
  return out;
}

std::string submission_to_json(const std::vector<Caption>& captions) {
  ojson arr = ojson::array();
  for (const auto& c : captions) arr.push_back({{"video_id", c.video_id}, {"caption", c.caption}});
  return arr.dump(2) + "\n";
}

namespace {

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

}  // namespace

MetricReport evaluate_submission(const std::vector<Caption>& submission, const corpus::Corpus& references,
                                 bool per_sentence) {
  std::map<std::string, const Caption*> by_id;
  std::vector<std::string> dups;
  for (const auto& c : submission)
    if (!by_id.emplace(c.video_id, &c).second) dups.push_back(c.video_id);
  if (!dups.empty()) {
    std::sort(dups.begin(), dups.end());
    dups.erase(std::unique(dups.begin(), dups.end()), dups.end());
    fail(ErrorKind::DuplicateIds, join_ids(dups));
  }

  std::set<std::string> ref_ids;
  std::vector<std::string> missing;
  for (const auto& e : references) {
    ref_ids.insert(e.clip_id);
    if (!by_id.contains(e.clip_id)) missing.push_back(e.clip_id);
  }
  if (!missing.empty()) fail(ErrorKind::MissingIds, join_ids(missing));
  std::vector<std::string> extra;
  for (const auto& [id, c] : by_id)
    if (!ref_ids.contains(id)) extra.push_back(id);
  if (!extra.empty()) fail(ErrorKind::ExtraIds, join_ids(extra));
  if (references.empty()) fail(ErrorKind::EmptyCorpus, "reference split is empty");

  Sentences hyps, refs;
  for (const auto& e : references) {
    hyps.push_back(by_id.at(e.clip_id)->caption);
    refs.push_back(e.sentence);
  }

  MetricReport rep;
  const auto b = bleu(hyps, refs, 4);
  std::copy(b.begin(), b.end(), rep.bleu.begin());
  rep.rouge_l = rouge_l(hyps, refs);
  rep.meteor_lite = meteor_lite(hyps, refs);
  std::vector<double> cider_pairs;
  if (hyps.size() >= 2) {
    cider_pairs = cider_per_pair(hyps, refs);
    rep.cider = std::accumulate(cider_pairs.begin(), cider_pairs.end(), 0.0) / static_cast<double>(cider_pairs.size());
  }

  if (per_sentence) {
    std::vector<SentenceScores> rows;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      SentenceScores s;
      s.video_id = references[i].clip_id;
      const auto sb = sentence_bleu(hyps[i], refs[i], 4);
      std::copy(sb.begin(), sb.end(), s.bleu.begin());
      s.meteor_lite = meteor_lite_score(hyps[i], refs[i]);
      s.rouge_l = rouge_l_pair(hyps[i], refs[i]);
      s.cider = cider_pairs.empty() ? 0.0 : cider_pairs[i];
      rows.push_back(std::move(s));
    }
    rep.per_sentence = std::move(rows);
  }
  return rep;
}

MetricReport evaluate_submission(std::string_view submission_json, const corpus::Corpus& references,
                                 bool per_sentence) {
  return evaluate_submission(parse_submission(submission_json), references, per_sentence);
}

std::string report_to_json(const MetricReport& r) {
  ojson j;
  for (std::size_t n = 0; n < 4; ++n) j["bleu_" + std::to_string(n + 1)] = r.bleu[n];
  j["meteor_lite"] = r.meteor_lite;
  j["rouge_l"] = r.rouge_l;
  j["cider"] = r.cider;
  if (r.per_sentence) {
    ojson rows = ojson::array();
    for (const auto& s : *r.per_sentence) {
      ojson row;
      row["video_id"] = s.video_id;
      for (std::size_t n = 0; n < 4; ++n) row["bleu_" + std::to_string(n + 1)] = s.bleu[n];
      row["meteor_lite"] = s.meteor_lite;
      row["rouge_l"] = s.rouge_l;
      row["cider"] = s.cider;
      rows.push_back(std::move(row));
    }
    j["per_sentence"] = std::move(rows);
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Retrieval

std::vector<FeatureVector> parse_features_jsonl(std::string_view text) {
  std::vector<FeatureVector> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = ojson::parse(line);
      FeatureVector f;
      const auto& id = j.at("id");
      f.id = id.is_string() ? id.get<std::string>() : id.dump();
      f.values = j.at("values").get<std::vector<double>>();
      out.push_back(std::move(f));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorKind::MalformedJson, "features line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

std::vector<double> l1_normalize(const std::vector<double>& values) {
  double sum = 0.0;
  for (const double v : values) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::Format, "feature values must be finite and non-negative");
    sum += v;
  }
  if (!(sum > 0.0)) fail(ErrorKind::ZeroVector, "cannot L1-normalize a zero vector");
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] / sum;
  return out;
}

double intersection_similarity(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorKind::DimMismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += std::min(x[i], y[i]);
  return s;
}

std::vector<Retrieved> nn_retrieve(const std::vector<FeatureVector>& test, const std::vector<FeatureVector>& train,
                                   const std::map<std::string, std::string>& train_sentences) {
  if (train.empty()) fail(ErrorKind::EmptyCorpus, "no training features");
  std::vector<const FeatureVector*> order;
  for (const auto& f : train) order.push_back(&f);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->id < b->id; });

  const std::size_t dim = order.front()->values.size();
  std::vector<std::vector<double>> normed;
  for (const auto* f : order) {
    if (f->values.size() != dim) fail(ErrorKind::DimMismatch, "training vector " + f->id);
    if (!train_sentences.contains(f->id)) fail(ErrorKind::Format, "no training sentence for clip " + f->id);
    try {
      normed.push_back(l1_normalize(f->values));
    } catch (const Error& e) {
      fail(e.kind(), "training vector " + f->id);
    }
  }

  std::vector<Retrieved> out;
  for (const auto& t : test) {
    if (t.values.size() != dim) fail(ErrorKind::DimMismatch, "test vector " + t.id);
    std::vector<double> q;
    try {
      q = l1_normalize(t.values);
    } catch (const Error& e) {
      fail(e.kind(), "test vector " + t.id);
    }
    std::size_t best = 0;
    double best_sim = -1.0;
    for (std::size_t k = 0; k < normed.size(); ++k) {
      const double s = intersection_similarity(q, normed[k]);
      if (s > best_sim) {
        best_sim = s;
        best = k;
      }
    }
    out.push_back({t.id, order[best]->id, train_sentences.at(order[best]->id), best_sim});
  }
  return out;
}

double retrieval_upper_bound(const Sentences& test_references, const Sentences& train_sentences,
                             const PairMetric& metric) {
  if (test_references.empty() || train_sentences.empty())
    fail(ErrorKind::EmptyCorpus, "upper bound needs test and training sentences");
  double acc = 0.0;
  for (const auto& ref : test_references) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& cand : train_sentences) best = std::max(best, metric(cand, ref));
    acc += best;
  }
  return acc / static_cast<double>(test_references.size());
}

}  // namespace adcorpus::metrics
