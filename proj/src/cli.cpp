#include "adcorpus/cli.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "adcorpus/audio.hpp"
#include "adcorpus/config.hpp"
#include "adcorpus/corpus.hpp"
#include "adcorpus/isolate.hpp"
#include "adcorpus/metrics.hpp"
#include "adcorpus/segment.hpp"
#include "adcorpus/sync.hpp"
#include "adcorpus/text.hpp"
#include "adcorpus/textalign.hpp"

namespace adcorpus::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Format:
    case ErrorKind::EmptyFile:
    case ErrorKind::MalformedJson:
    case ErrorKind::BadConfig:
    case ErrorKind::BadPattern:
    case ErrorKind::MissingIds:
    case ErrorKind::ExtraIds:
    case ErrorKind::DuplicateIds:
    case ErrorKind::AssignmentConflict:
    case ErrorKind::UnassignedMovie:
    case ErrorKind::DimMismatch:
    case ErrorKind::ZeroVector:
    case ErrorKind::RateMismatch:
    case ErrorKind::NotStereo:
    case ErrorKind::LengthMismatch:
      return InputError;
    default:
      return ProcessingError;
  }
}

namespace {

// --- files -------------------------------------------------------------------

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + p.string());
  out << content;
  if (!out) fail(ErrorKind::Io, "write failed for " + p.string());
}

// --- JSON views ----------------------------------------------------------------

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

// Segment lists are published with millisecond resolution.
double ms(double v) { return std::round(v * 1000.0) / 1000.0; }

ojson offset_json(const sync::OffsetEstimate& o, int rate) {
  ojson j;
  j["offset_samples"] = o.offset_samples;
  j["offset_sec"] = static_cast<double>(o.offset_samples) / rate;
  j["peak_correlation"] = o.peak_correlation;
  j["secondary_ratio"] = number_or_null(o.secondary_ratio);
  j["low_confidence"] = o.low_confidence;
  return j;
}

ojson segments_json(const segment::PipelineResult& r, int rate) {
  ojson segs = ojson::array();
  for (const auto& s : r.segments)
    segs.push_back({{"start_sec", ms(s.start_sec)},
                    {"end_sec", ms(s.end_sec)},
                    {"peak_energy", ms(s.peak_energy)},
                    {"mean_energy", ms(s.mean_energy)}});
  ojson j;
  j["segments"] = std::move(segs);
  j["offset"] = offset_json(r.offset, rate);
  j["threshold"] = r.threshold;
  j["warnings"] = r.warnings;
  return j;
}

ojson subtitles_json(const textalign::SrtParse& p) {
  ojson subs = ojson::array();
  for (const auto& s : p.subtitles)
    subs.push_back({{"index", s.index}, {"start_sec", s.start_sec}, {"end_sec", s.end_sec}, {"text", s.text}});
  ojson j;
  j["subtitles"] = std::move(subs);
  j["warnings"] = p.warnings;
  return j;
}

ojson script_json(const std::vector<textalign::ScriptElement>& elems) {
  ojson arr = ojson::array();
  for (const auto& e : elems) {
    ojson o;
    o["ordinal"] = e.ordinal;
    o["kind"] = std::string(textalign::to_string(e.kind));
    if (e.speaker) o["speaker"] = *e.speaker;
    o["text"] = e.text;
    arr.push_back(std::move(o));
  }
  return ojson{{"elements", std::move(arr)}};
}

ojson sentence_json(const textalign::AlignedSentence& s) {
  return {{"movie_id", s.movie_id},
          {"start_sec", s.start_sec},
          {"end_sec", s.end_sec},
          {"sentence", s.sentence},
          {"source", std::string(textalign::to_string(s.source))},
          {"score", s.score}};
}

ojson sentences_json(const std::vector<textalign::AlignedSentence>& v) {
  ojson arr = ojson::array();
  for (const auto& s : v) arr.push_back(sentence_json(s));
  return arr;
}

// Accepts a bare array or an align-script result ({"kept": [...]}).
std::vector<textalign::AlignedSentence> parse_sentences(const std::string& body, const std::string& where) {
  ojson j;
  try {
    j = ojson::parse(body);
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::MalformedJson, where + ": " + ex.what());
  }
  if (j.is_object() && j.contains("kept")) j = j["kept"];
  if (!j.is_array()) fail(ErrorKind::Format, where + ": expected an array of aligned sentences");
  std::vector<textalign::AlignedSentence> out;
  try {
    for (const auto& o : j) {
      textalign::AlignedSentence s;
      s.movie_id = o.at("movie_id").get<std::string>();
      s.start_sec = o.at("start_sec").get<double>();
      s.end_sec = o.at("end_sec").get<double>();
      s.sentence = o.at("sentence").get<std::string>();
      s.source = textalign::source_from_string(o.value("source", std::string("script")));
      s.score = o.value("score", 1.0);
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Format, where + ": " + ex.what());
  }
  return out;
}

ojson dropped_json(const std::vector<corpus::Dropped>& dropped) {
  ojson arr = ojson::array();
  for (const auto& d : dropped)
    arr.push_back({{"clip_id", d.entry.clip_id},
                   {"movie_id", d.entry.movie_id},
                   {"start_sec", d.entry.start_sec},
                   {"end_sec", d.entry.end_sec},
                   {"sentence", d.entry.sentence},
                   {"reason", std::string(corpus::to_string(d.reason))}});
  return arr;
}

ojson stats_json(const corpus::Corpus& c) {
  const auto s = corpus::corpus_stats(c);
  const auto v = corpus::vocab_stats(c);
  ojson j;
  j["movies"] = s.movies;
  j["words"] = s.words;
  j["sentences"] = s.sentences;
  j["clips"] = s.clips;
  j["avg_clip_sec"] = s.avg_clip_sec;
  j["avg_clip_sec_original"] = s.avg_clip_sec_original;
  j["total_hours"] = s.total_hours;
  j["total_hours_original"] = s.total_hours_original;
  j["vocab_size_raw"] = v.vocab_size_raw;
  j["vocab_size_stemmed"] = v.vocab_size_stemmed;
  return j;
}

std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

// --- run context ---------------------------------------------------------------

struct Context {
  std::ostream& out;
  std::ostream& err;
  config::Config cfg;
  bool strict = false;
  int workers = 1;
  fs::path log_path;
  std::vector<std::string> log;

  Context(std::ostream& o, std::ostream& e) : out(o), err(e) {}

  void warn(const std::string& w) {
    err << "warning: " << w << '\n';
    log.push_back("warning: " + w);
  }

  void emit(const fs::path& path, const std::string& content) {
    if (path.empty())
      out << content;
    else
      write_file(path, content);
  }
};

void report_pipeline_warnings(Context& ctx, const std::vector<std::string>& warnings, const std::string& prefix) {
  for (const auto& w : warnings) {
    ctx.warn(prefix + w);
    if (ctx.strict && w.rfind("LowConfidence", 0) == 0) fail(ErrorKind::LowConfidence, prefix + w);
  }
}

corpus::Corpus load_corpus(const fs::path& p) { return corpus::parse_jsonl(read_file(p)); }

std::vector<std::string> sentences_of(const corpus::Corpus& c) {
  std::vector<std::string> out;
  for (const auto& e : c) out.push_back(e.sentence);
  return out;
}

std::map<std::string, double> configured_durations(const config::Config& cfg) {
  std::map<std::string, double> d;
  for (const auto& m : cfg.movies)
    if (m.duration_sec) d[m.id] = *m.duration_sec;
  return d;
}

corpus::AssembleOptions assemble_options(const config::Config& cfg) {
  corpus::AssembleOptions o;
  if (!cfg.names.empty()) o.names = corpus::NameLexicon::parse(read_file(cfg.names));
  if (!cfg.drop_patterns.empty()) o.patterns = corpus::DropPatterns::parse(read_file(cfg.drop_patterns));
  o.intro_outro_sec = cfg.intro_outro_sec;
  o.min_clip_sec = cfg.min_clip_sec;
  o.movie_durations = configured_durations(cfg);
  return o;
}

void write_splits(const corpus::Corpus& c, const corpus::Assignment& a, const fs::path& dir) {
  const auto splits = corpus::split_by_movie(c, a);
  for (const auto s : {corpus::Split::Train, corpus::Split::Val, corpus::Split::PublicTest, corpus::Split::BlindTest}) {
    const auto it = splits.find(s);
    const corpus::Corpus empty;
    const auto& part = it == splits.end() ? empty : it->second;
    write_file(dir / (std::string(corpus::to_string(s)) + ".jsonl"),
               corpus::to_jsonl(part, s != corpus::Split::BlindTest));
  }
}

// --- subcommands ---------------------------------------------------------------

struct SegmentArgs {
  std::string movie, ad, out;
};

int cmd_sync(Context& ctx, const SegmentArgs& a) {
  const auto movie = audio::to_mono(audio::load_wav(a.movie));
  const auto ad = audio::to_mono(audio::load_wav(a.ad));
  const auto est = sync::estimate_offset(movie, ad, ctx.cfg.pipeline.sync);
  if (est.low_confidence) {
    const std::string w = "LowConfidence: correlation peak ratio below " +
                          std::to_string(ctx.cfg.pipeline.sync.low_confidence_ratio);
    report_pipeline_warnings(ctx, {w}, "");
  }
  ctx.emit(a.out, dump(offset_json(est, movie.sample_rate())));
  return Ok;
}

int cmd_segment(Context& ctx, const SegmentArgs& a, bool semi) {
  const auto movie = audio::load_wav(a.movie);
  const auto ad = audio::load_wav(a.ad);
  const auto r = semi ? segment::semi_auto_pipeline(movie, ad, ctx.cfg.pipeline)
                      : segment::auto_ad_pipeline(movie, ad, ctx.cfg.pipeline);
  report_pipeline_warnings(ctx, r.warnings, "");
  ctx.emit(a.out, dump(segments_json(r, movie.sample_rate())));
  return Ok;
}

struct IsolateArgs {
  std::string in, reference, out, format = "pcm16";
};

int cmd_isolate(Context& ctx, const IsolateArgs& a) {
  const auto depth = a.format == "float32" ? audio::BitDepth::Float32 : audio::BitDepth::Pcm16;
  const auto input = audio::load_wav(a.in);
  audio::AudioTrack result = input.channels() == 2 ? isolate::extract_center(input, ctx.cfg.pipeline.side_gain)
                                                    : input;
  if (!a.reference.empty()) {
    auto ref = audio::load_wav(a.reference);
    if (ref.channels() == 2) ref = isolate::extract_center(ref, ctx.cfg.pipeline.side_gain);
    result = isolate::nlms_cancel(result, ref, ctx.cfg.pipeline.nlms);
  }
  audio::write_wav(result, a.out, depth);
  return Ok;
}

int cmd_parse_srt(Context& ctx, const std::string& in, const std::string& out) {
  const auto parsed = textalign::parse_srt(read_file(in));
  for (const auto& w : parsed.warnings) ctx.warn(in + ": " + w);
  ctx.emit(out, dump(subtitles_json(parsed)));
  return Ok;
}

int cmd_parse_script(Context& ctx, const std::string& in, const std::string& out, int indent) {
  textalign::ScriptFormatHints hints;
  hints.dialogue_min_indent = indent;
  ctx.emit(out, dump(script_json(textalign::parse_script(read_file(in), hints))));
  return Ok;
}

struct AlignOutput {
  std::vector<textalign::AlignedSentence> kept;
  std::vector<textalign::AlignedSentence> dropped;
  std::vector<std::string> warnings;
};

AlignOutput align_movie(const config::Config& cfg, const fs::path& script_path, const fs::path& srt_path,
                        const std::string& movie_id) {
  AlignOutput o;
  const auto srt = textalign::parse_srt(read_file(srt_path));
  for (const auto& w : srt.warnings) o.warnings.push_back(srt_path.filename().string() + ": " + w);
  const auto script = textalign::parse_script(read_file(script_path));
  const auto alignment = textalign::align_dialogue(script, srt.subtitles, cfg.align);
  const auto timed = textalign::infer_timestamps(alignment, script, srt.subtitles, movie_id, cfg.infer);
  auto [kept, dropped] = textalign::reliability_filter(timed, cfg.min_score);
  o.kept = std::move(kept);
  o.dropped = std::move(dropped);
  return o;
}

ojson align_json(const AlignOutput& o) {
  ojson j;
  j["kept"] = sentences_json(o.kept);
  j["dropped"] = sentences_json(o.dropped);
  return j;
}

int cmd_align(Context& ctx, const std::string& script, const std::string& srt, const std::string& movie_id,
              const std::string& out) {
  const auto o = align_movie(ctx.cfg, script, srt, movie_id);
  for (const auto& w : o.warnings) ctx.warn(w);
  ctx.emit(out, dump(align_json(o)));
  return Ok;
}

struct BuildArgs {
  std::vector<std::string> aligned;
  std::string out, dropped_out, splits_dir;
};

int cmd_build(Context& ctx, const BuildArgs& a) {
  std::vector<textalign::AlignedSentence> all;
  for (const auto& f : a.aligned) {
    auto part = parse_sentences(read_file(f), f);
    all.insert(all.end(), part.begin(), part.end());
  }
  const auto assembled = corpus::assemble_corpus(std::move(all), assemble_options(ctx.cfg));
  ctx.emit(a.out, corpus::to_jsonl(assembled.corpus));
  if (!a.dropped_out.empty()) write_file(a.dropped_out, dump(dropped_json(assembled.dropped)));
  if (!ctx.cfg.assignment.empty()) {
    if (a.splits_dir.empty()) fail(ErrorKind::BadParam, "corpus.assignment is set but --splits-dir is missing");
    write_splits(assembled.corpus, corpus::parse_assignment(read_file(ctx.cfg.assignment)), a.splits_dir);
  }
  return Ok;
}

struct StatsArgs {
  std::string corpus, hyps, train, out;
};

int cmd_stats(Context& ctx, const StatsArgs& a) {
  const auto c = load_corpus(a.corpus);
  ojson j = stats_json(c);
  if (!a.hyps.empty()) {
    if (a.train.empty()) fail(ErrorKind::BadParam, "--hyps needs --train");
    std::vector<std::string> hyps;
    for (const auto& cap : metrics::parse_submission(read_file(a.hyps))) hyps.push_back(cap.caption);
    const auto d = corpus::description_stats(hyps, sentences_of(load_corpus(a.train)));
    j["description"] = {{"avg_sentence_length", d.avg_sentence_length},
                        {"vocab_size", d.vocab_size},
                        {"unique_sentences", d.unique_sentences},
                        {"pct_novel", d.pct_novel}};
  }
  ctx.emit(a.out, dump(j));
  return Ok;
}

struct EvalArgs {
  std::string submission, refs, out, curve, curve_out;
  bool per_sentence = false;
  std::size_t window = 500;
};

int cmd_eval(Context& ctx, const EvalArgs& a) {
  const auto refs = load_corpus(a.refs);
  const bool need_rows = a.per_sentence || !a.curve.empty();
  const auto report = metrics::evaluate_submission(std::string_view(read_file(a.submission)), refs, need_rows);
  metrics::MetricReport shown = report;
  if (!a.per_sentence) shown.per_sentence.reset();
  ctx.emit(a.out, metrics::report_to_json(shown));
  if (!a.curve.empty()) {
    if (a.curve_out.empty()) fail(ErrorKind::BadParam, "--curve needs --curve-out");
    std::vector<double> scores;
    for (const auto& row : *report.per_sentence) scores.push_back(row.meteor_lite);
    const auto curve = corpus::difficulty_curve(scores, sentences_of(refs), corpus::sort_key_from_string(a.curve),
                                                a.window);
    ojson j;
    j["sort_key"] = a.curve;
    j["window"] = a.window;
    j["metric"] = "meteor_lite";
    j["order"] = curve.order;
    j["smoothed"] = curve.smoothed;
    write_file(a.curve_out, dump(j));
  }
  return Ok;
}

struct NnArgs {
  std::string test_features, train_features, train, out;
};

int cmd_nn(Context& ctx, const NnArgs& a) {
  const auto train = load_corpus(a.train);
  std::map<std::string, std::string> sentences;
  for (const auto& e : train) sentences[e.clip_id] = e.sentence;
  const auto got = metrics::nn_retrieve(metrics::parse_features_jsonl(read_file(a.test_features)),
                                        metrics::parse_features_jsonl(read_file(a.train_features)), sentences);
  std::vector<metrics::Caption> caps;
  for (const auto& r : got) caps.push_back({r.test_id, r.sentence});
  ctx.emit(a.out, metrics::submission_to_json(caps));
  return Ok;
}

struct UpperArgs {
  std::string test, train, out, metric = "meteor_lite";
};

int cmd_upper(Context& ctx, const UpperArgs& a) {
  metrics::PairMetric m = metrics::meteor_lite_score;
  if (a.metric == "rouge_l")
    m = [](std::string_view h, std::string_view r) { return metrics::rouge_l_pair(h, r); };
  else if (a.metric == "bleu_4")
    m = [](std::string_view h, std::string_view r) { return metrics::sentence_bleu(h, r, 4)[3]; };
  const double v = metrics::retrieval_upper_bound(sentences_of(load_corpus(a.test)), sentences_of(load_corpus(a.train)), m);
  ojson j;
  j["metric"] = a.metric;
  j["upper_bound"] = v;
  ctx.emit(a.out, dump(j));
  return Ok;
}

// --- pipeline --------------------------------------------------------------------

struct MovieOutput {
  std::optional<std::string> segments;
  std::optional<std::string> aligned;
  std::vector<textalign::AlignedSentence> sentences;
  std::vector<std::string> warnings;
  std::optional<double> duration_sec;
};

std::vector<std::string> transcript_lines(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

MovieOutput run_movie(const config::Config& cfg, const config::MovieInputs& m) {
  MovieOutput o;
  o.duration_sec = m.duration_sec;
  if (!m.movie_wav.empty() && !m.ad_wav.empty()) {
    const auto movie = audio::load_wav(m.movie_wav);
    const auto ad = audio::load_wav(m.ad_wav);
    if (!o.duration_sec) o.duration_sec = movie.duration_sec();
    const auto r = cfg.mode == "semi" ? segment::semi_auto_pipeline(movie, ad, cfg.pipeline)
                                      : segment::auto_ad_pipeline(movie, ad, cfg.pipeline);
    for (const auto& w : r.warnings) o.warnings.push_back(w);
    o.segments = dump(segments_json(r, movie.sample_rate()));
    if (!m.ad_transcript.empty()) {
      const auto lines = transcript_lines(m.ad_transcript);
      if (lines.size() != r.segments.size())
        fail(ErrorKind::Format, "movie " + m.id + ": transcript has " + std::to_string(lines.size()) +
                                    " lines for " + std::to_string(r.segments.size()) + " segments");
      for (std::size_t i = 0; i < lines.size(); ++i) {
        textalign::AlignedSentence s;
        s.sentence = lines[i];
        s.start_sec = r.segments[i].start_sec;
        s.end_sec = r.segments[i].end_sec;
        s.score = 1.0;
        s.source = textalign::Source::Ad;
        s.movie_id = m.id;
        o.sentences.push_back(std::move(s));
      }
    } else {
      o.warnings.push_back("no ad_transcript; AD segments are not added to the corpus");
    }
  } else if (!m.movie_wav.empty() || !m.ad_wav.empty()) {
    fail(ErrorKind::BadConfig, "movie." + m.id + ": movie_wav and ad_wav must be given together");
  }
  if (!m.script.empty() && !m.srt.empty()) {
    const auto a = align_movie(cfg, m.script, m.srt, m.id);
    o.warnings.insert(o.warnings.end(), a.warnings.begin(), a.warnings.end());
    o.aligned = dump(align_json(a));
    o.sentences.insert(o.sentences.end(), a.kept.begin(), a.kept.end());
  } else if (!m.script.empty() || !m.srt.empty()) {
    fail(ErrorKind::BadConfig, "movie." + m.id + ": script and srt must be given together");
  }
  return o;
}

int cmd_pipeline(Context& ctx) {
  const auto& cfg = ctx.cfg;
  if (cfg.movies.empty()) fail(ErrorKind::BadConfig, "no [movie.<id>] sections");
  const std::size_t n = cfg.movies.size();
  std::vector<std::optional<MovieOutput>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = run_movie(cfg, cfg.movies[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(ctx.workers), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  std::vector<textalign::AlignedSentence> all;
  auto opts = assemble_options(cfg);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = cfg.movies[i].id;
    auto& r = *results[i];
    report_pipeline_warnings(ctx, r.warnings, "movie " + id + ": ");
    if (r.segments) write_file(dir / (id + ".segments.json"), *r.segments);
    if (r.aligned) write_file(dir / (id + ".aligned.json"), *r.aligned);
    if (r.duration_sec && !opts.movie_durations.contains(id)) opts.movie_durations[id] = *r.duration_sec;
    all.insert(all.end(), r.sentences.begin(), r.sentences.end());
  }

  const auto assembled = corpus::assemble_corpus(std::move(all), opts);
  write_file(dir / "corpus.jsonl", corpus::to_jsonl(assembled.corpus));
  write_file(dir / "dropped.json", dump(dropped_json(assembled.dropped)));
  write_file(dir / "stats.json", dump(stats_json(assembled.corpus)));
  if (!cfg.assignment.empty())
    write_splits(assembled.corpus, corpus::parse_assignment(read_file(cfg.assignment)), dir / "splits");
  ctx.out << "wrote " << assembled.corpus.size() << " clips for " << n << " movies to " << dir.string() << '\n';
  return Ok;
}

// --- argument handling -------------------------------------------------------------

struct Override {
  std::string key;
  std::string value;
};

// Pulls "--section.key value" and "--section.key=value" out of the argument
// list; everything else is left for the parser.
std::vector<std::string> extract_overrides(const std::vector<std::string>& args, std::vector<Override>& found) {
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (i == 0 || a.rfind("--", 0) != 0) {
      rest.push_back(a);
      continue;
    }
    const auto eq = a.find('=');
    const std::string name = a.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
    if (name.find('.') == std::string::npos) {
      rest.push_back(a);
      continue;
    }
    if (eq != std::string::npos) {
      found.push_back({name, a.substr(eq + 1)});
    } else {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--" + name + " needs a value");
      found.push_back({name, args[++i]});
    }
  }
  return rest;
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_log(const Context& ctx, const std::vector<std::string>& args, const std::string& started, int code) {
  if (ctx.log_path.empty()) return;
  std::ostringstream s;
  s << "started " << started << '\n' << "finished " << timestamp_utc() << '\n' << "argv";
  for (const auto& a : args) s << ' ' << a;
  s << "\nexit " << code << "\n\n[effective config]\n" << config::to_text(ctx.cfg);
  if (!ctx.log.empty()) {
    s << "\n[messages]\n";
    for (const auto& l : ctx.log) s << l << '\n';
  }
  try {
    write_file(ctx.log_path, s.str());
  } catch (const Error&) {
    // a missing sidecar never changes the exit status
  }
}

}  // namespace

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  const std::string started = timestamp_utc();
  Context ctx{out, err};

  CLI::App app{"Audio-description corpus toolkit", args_in.empty() ? "adcorpus" : args_in[0]};
  app.require_subcommand(1);
  std::string config_path, log_path;
  bool strict = false;
  int workers = 0;
  app.add_option("--config", config_path, "Config file (sectioned key = value)");
  app.add_flag("--strict", strict, "Treat low-confidence sync as an error");
  app.add_option("--workers", workers, "Parallel movie jobs (pipeline)")->check(CLI::PositiveNumber);
  app.add_option("--log", log_path, "Sidecar run log");
  app.footer("Any config key can be overridden with --section.key VALUE, e.g. --segment.min_seg_sec 0.5");

  SegmentArgs sync_args;
  auto* sync_cmd = app.add_subcommand("sync", "Estimate the offset of the AD mix against the movie audio");
  sync_cmd->add_option("--movie", sync_args.movie, "Movie soundtrack WAV")->required();
  sync_cmd->add_option("--ad", sync_args.ad, "AD-mixed WAV")->required();
  sync_cmd->add_option("--out", sync_args.out, "Output JSON (default: stdout)");

  IsolateArgs iso_args;
  auto* iso_cmd = app.add_subcommand("isolate", "Center extraction and optional NLMS cancellation");
  iso_cmd->add_option("--in", iso_args.in, "Input WAV (stereo is reduced to its center)")->required();
  iso_cmd->add_option("--reference", iso_args.reference, "Reference WAV to cancel");
  iso_cmd->add_option("--out", iso_args.out, "Output WAV")->required();
  iso_cmd->add_option("--format", iso_args.format, "pcm16 or float32")
      ->check(CLI::IsMember({"pcm16", "float32"}));

  SegmentArgs seg_args;
  auto* seg_cmd = app.add_subcommand("segment", "Detect narration segments");
  seg_cmd->require_subcommand(1);
  CLI::App* seg_modes[2];
  const char* mode_names[2] = {"auto", "semi"};
  for (int i = 0; i < 2; ++i) {
    seg_modes[i] = seg_cmd->add_subcommand(mode_names[i], i == 0 ? "Center extraction + NLMS residual"
                                                                 : "Spectrogram difference");
    seg_modes[i]->add_option("--movie", seg_args.movie, "Movie soundtrack WAV")->required();
    seg_modes[i]->add_option("--ad", seg_args.ad, "AD-mixed WAV")->required();
    seg_modes[i]->add_option("--out", seg_args.out, "Output JSON (default: stdout)");
  }

  std::string srt_in, srt_out;
  auto* srt_cmd = app.add_subcommand("parse-srt", "Parse an SRT file to JSON");
  srt_cmd->add_option("--in", srt_in, "SRT file")->required();
  srt_cmd->add_option("--out", srt_out, "Output JSON (default: stdout)");

  std::string script_in, script_out;
  int indent = -1;
  auto* script_cmd = app.add_subcommand("parse-script", "Classify script lines");
  script_cmd->add_option("--in", script_in, "Script text file")->required();
  script_cmd->add_option("--out", script_out, "Output JSON (default: stdout)");
  script_cmd->add_option("--dialogue-indent", indent, "Minimum dialogue indentation (default: inferred)");

  std::string al_script, al_srt, al_movie, al_out;
  auto* align_cmd = app.add_subcommand("align-script", "Align script dialogue to subtitles and time descriptions");
  align_cmd->add_option("--script", al_script, "Script text file")->required();
  align_cmd->add_option("--srt", al_srt, "Subtitle file")->required();
  align_cmd->add_option("--movie-id", al_movie, "Movie id")->required();
  align_cmd->add_option("--out", al_out, "Output JSON (default: stdout)");

  BuildArgs build_args;
  auto* build_cmd = app.add_subcommand("build-corpus", "Assemble aligned sentences into a corpus");
  build_cmd->add_option("--aligned", build_args.aligned, "Aligned sentence JSON files")->required();
  build_cmd->add_option("--out", build_args.out, "Corpus JSONL (default: stdout)");
  build_cmd->add_option("--dropped-out", build_args.dropped_out, "JSON list of filtered entries");
  build_cmd->add_option("--splits-dir", build_args.splits_dir, "Directory for per-split JSONL");

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus, vocabulary and description statistics");
  stats_cmd->add_option("--corpus", stats_args.corpus, "Corpus JSONL")->required();
  stats_cmd->add_option("--hyps", stats_args.hyps, "Submission JSON to describe");
  stats_cmd->add_option("--train", stats_args.train, "Training corpus JSONL");
  stats_cmd->add_option("--out", stats_args.out, "Output JSON (default: stdout)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score a submission against a reference split");
  eval_cmd->add_option("--submission", eval_args.submission, "Submission JSON")->required();
  eval_cmd->add_option("--refs", eval_args.refs, "Reference JSONL")->required();
  eval_cmd->add_flag("--per-sentence", eval_args.per_sentence, "Include per-clip scores");
  eval_cmd->add_option("--out", eval_args.out, "Report JSON (default: stdout)");
  eval_cmd->add_option("--curve", eval_args.curve, "Difficulty curve sort key")
      ->check(CLI::IsMember({"length_asc", "word_freq_desc"}));
  eval_cmd->add_option("--curve-out", eval_args.curve_out, "Difficulty curve JSON");
  eval_cmd->add_option("--window", eval_args.window, "Moving-average window")->check(CLI::PositiveNumber);

  NnArgs nn_args;
  auto* nn_cmd = app.add_subcommand("nn-baseline", "Nearest-neighbor sentence retrieval");
  nn_cmd->add_option("--test-features", nn_args.test_features, "Test feature JSONL")->required();
  nn_cmd->add_option("--train-features", nn_args.train_features, "Training feature JSONL")->required();
  nn_cmd->add_option("--train", nn_args.train, "Training corpus JSONL")->required();
  nn_cmd->add_option("--out", nn_args.out, "Submission JSON (default: stdout)");

  UpperArgs up_args;
  auto* up_cmd = app.add_subcommand("upper-bound", "Oracle retrieval score");
  up_cmd->add_option("--test", up_args.test, "Test corpus JSONL")->required();
  up_cmd->add_option("--train", up_args.train, "Training corpus JSONL")->required();
  up_cmd->add_option("--metric", up_args.metric, "meteor_lite, rouge_l or bleu_4")
      ->check(CLI::IsMember({"meteor_lite", "rouge_l", "bleu_4"}));
  up_cmd->add_option("--out", up_args.out, "Output JSON (default: stdout)");

  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every configured movie end to end");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();
  for (auto* sub : seg_cmd->get_subcommands({})) sub->fallthrough();

  std::vector<Override> overrides;
  int code = Ok;
  try {
    auto rest = extract_overrides(args_in, overrides);
    std::vector<std::string> reversed(rest.rbegin(), rest.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return Ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return Ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return Usage;
  }

  try {
    if (!config_path.empty()) ctx.cfg = config::load_config(config_path);
    for (const auto& o : overrides) config::apply_override(ctx.cfg, o.key, o.value);
    ctx.strict = strict || ctx.cfg.strict;
    ctx.workers = workers > 0 ? workers : ctx.cfg.workers;
    ctx.log_path = log_path;
    if (pipe_cmd->parsed() && ctx.log_path.empty()) ctx.log_path = ctx.cfg.out_dir / "run.log";

    if (sync_cmd->parsed())
      code = cmd_sync(ctx, sync_args);
    else if (iso_cmd->parsed())
      code = cmd_isolate(ctx, iso_args);
    else if (seg_cmd->parsed())
      code = cmd_segment(ctx, seg_args, seg_modes[1]->parsed());
    else if (srt_cmd->parsed())
      code = cmd_parse_srt(ctx, srt_in, srt_out);
    else if (script_cmd->parsed())
      code = cmd_parse_script(ctx, script_in, script_out, indent);
    else if (align_cmd->parsed())
      code = cmd_align(ctx, al_script, al_srt, al_movie, al_out);
    else if (build_cmd->parsed())
      code = cmd_build(ctx, build_args);
    else if (stats_cmd->parsed())
      code = cmd_stats(ctx, stats_args);
    else if (eval_cmd->parsed())
      code = cmd_eval(ctx, eval_args);
    else if (nn_cmd->parsed())
      code = cmd_nn(ctx, nn_args);
    else if (up_cmd->parsed())
      code = cmd_upper(ctx, up_args);
    else if (pipe_cmd->parsed())
      code = cmd_pipeline(ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    ctx.log.push_back(std::string("error: ") + e.what());
    code = exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    ctx.log.push_back(std::string("error: ") + e.what());
    code = InputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    ctx.log.push_back(std::string("error: ") + e.what());
    code = ProcessingError;
  }
  write_log(ctx, args_in, started, code);
  return code;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace adcorpus::cli
