#include "adcorpus/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "adcorpus/error.hpp"
#include "adcorpus/text.hpp"

namespace adcorpus::config {

namespace {

enum class Type { Number, Integer, Boolean, String, Path };

struct Raw {
  std::string text;
  bool quoted = false;
};

struct Key {
  Type type = Type::Number;
  std::function<void(Config&, double)> set_number;
  std::function<void(Config&, long long)> set_integer;
  std::function<void(Config&, bool)> set_bool;
  std::function<void(Config&, std::string)> set_string;
  std::function<std::string(const Config&)> get;
};

std::string fmt_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out.push_back(c);
    }
  }
  return out + "\"";
}

template <class F>
Key num_key(F ref) {
  Key k;
  k.type = Type::Number;
  k.set_number = [ref](Config& c, double v) { ref(c) = v; };
  k.get = [ref](const Config& c) { return fmt_number(ref(const_cast<Config&>(c))); };
  return k;
}

template <class F>
Key int_key(F ref) {
  Key k;
  k.type = Type::Integer;
  k.set_integer = [ref](Config& c, long long v) { ref(c) = static_cast<int>(v); };
  k.get = [ref](const Config& c) { return std::to_string(ref(const_cast<Config&>(c))); };
  return k;
}

template <class F>
Key bool_key(F ref) {
  Key k;
  k.type = Type::Boolean;
  k.set_bool = [ref](Config& c, bool v) { ref(c) = v; };
  k.get = [ref](const Config& c) { return std::string(ref(const_cast<Config&>(c)) ? "true" : "false"); };
  return k;
}

template <class F>
Key str_key(F ref) {
  Key k;
  k.type = Type::String;
  k.set_string = [ref](Config& c, std::string v) { ref(c) = std::move(v); };
  k.get = [ref](const Config& c) { return quote(ref(const_cast<Config&>(c))); };
  return k;
}

template <class F>
Key path_key(F ref) {
  Key k;
  k.type = Type::Path;
  k.set_string = [ref](Config& c, std::string v) { ref(c) = std::filesystem::path(v); };
  k.get = [ref](const Config& c) { return quote(ref(const_cast<Config&>(c)).string()); };
  return k;
}

const std::map<std::string, Key>& key_table() {
  static const std::map<std::string, Key> table = [] {
    std::map<std::string, Key> t;
    t.emplace("audio.frame_sec", num_key([](Config& c) -> double& { return c.pipeline.frame_sec; }));
    t.emplace("audio.hop_sec", num_key([](Config& c) -> double& { return c.pipeline.hop_sec; }));
    t.emplace("sync.max_lag_sec", num_key([](Config& c) -> double& { return c.pipeline.sync.max_lag_sec; }));
    t.emplace("sync.low_confidence_ratio",
              num_key([](Config& c) -> double& { return c.pipeline.sync.low_confidence_ratio; }));
    t.emplace("isolate.side_gain", num_key([](Config& c) -> double& { return c.pipeline.side_gain; }));
    t.emplace("nlms.taps", int_key([](Config& c) -> int& { return c.pipeline.nlms.taps; }));
    t.emplace("nlms.mu", num_key([](Config& c) -> double& { return c.pipeline.nlms.mu; }));
    t.emplace("nlms.eps", num_key([](Config& c) -> double& { return c.pipeline.nlms.eps; }));
    t.emplace("segment.threshold", num_key([](Config& c) -> double& { return c.pipeline.threshold; }));
    t.emplace("segment.quantile", num_key([](Config& c) -> double& { return c.pipeline.quantile; }));
    t.emplace("segment.factor", num_key([](Config& c) -> double& { return c.pipeline.factor; }));
    t.emplace("segment.threshold_floor", num_key([](Config& c) -> double& { return c.pipeline.threshold_floor; }));
    t.emplace("segment.min_seg_sec", num_key([](Config& c) -> double& { return c.pipeline.min_seg_sec; }));
    t.emplace("segment.min_gap_sec", num_key([](Config& c) -> double& { return c.pipeline.min_gap_sec; }));
    t.emplace("segment.pad_end_sec", num_key([](Config& c) -> double& { return c.pipeline.pad_end_sec; }));
    t.emplace("align.gap", num_key([](Config& c) -> double& { return c.align.gap; }));
    t.emplace("align.min_score", num_key([](Config& c) -> double& { return c.min_score; }));
    t.emplace("align.edge_span_sec", num_key([](Config& c) -> double& { return c.infer.edge_span_sec; }));
    t.emplace("corpus.intro_outro_sec", num_key([](Config& c) -> double& { return c.intro_outro_sec; }));
    t.emplace("corpus.min_clip_sec", num_key([](Config& c) -> double& { return c.min_clip_sec; }));
    t.emplace("corpus.names", path_key([](Config& c) -> std::filesystem::path& { return c.names; }));
    t.emplace("corpus.drop_patterns", path_key([](Config& c) -> std::filesystem::path& { return c.drop_patterns; }));
    t.emplace("corpus.assignment", path_key([](Config& c) -> std::filesystem::path& { return c.assignment; }));
    t.emplace("pipeline.out_dir", path_key([](Config& c) -> std::filesystem::path& { return c.out_dir; }));
    t.emplace("pipeline.mode", str_key([](Config& c) -> std::string& { return c.mode; }));
    t.emplace("pipeline.workers", int_key([](Config& c) -> int& { return c.workers; }));
    t.emplace("pipeline.strict", bool_key([](Config& c) -> bool& { return c.strict; }));
    return t;
  }();
  return table;
}

const std::vector<std::string>& movie_keys() {
  static const std::vector<std::string> keys = {"movie_wav", "ad_wav", "ad_transcript", "srt", "script", "duration_sec"};
  return keys;
}

std::string unescape(std::string_view body, const std::string& key) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '\\') {
      out.push_back(body[i]);
      continue;
    }
    if (++i >= body.size()) fail(ErrorKind::BadConfig, key + ": dangling escape");
    switch (body[i]) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      default: fail(ErrorKind::BadConfig, key + ": unknown escape");
    }
  }
  return out;
}

double to_number(const Raw& raw, const std::string& key) {
  double v = 0.0;
  const char* b = raw.text.data();
  const char* e = b + raw.text.size();
  const auto [p, ec] = std::from_chars(b, e, v);
  if (raw.quoted || ec != std::errc{} || p != e || !std::isfinite(v))
    fail(ErrorKind::BadConfig, key + ": expected a number, got '" + raw.text + "'");
  return v;
}

long long to_integer(const Raw& raw, const std::string& key) {
  long long v = 0;
  const char* b = raw.text.data();
  const char* e = b + raw.text.size();
  const auto [p, ec] = std::from_chars(b, e, v);
  if (raw.quoted || ec != std::errc{} || p != e)
    fail(ErrorKind::BadConfig, key + ": expected an integer, got '" + raw.text + "'");
  return v;
}

bool to_bool(const Raw& raw, const std::string& key) {
  if (!raw.quoted && raw.text == "true") return true;
  if (!raw.quoted && raw.text == "false") return false;
  fail(ErrorKind::BadConfig, key + ": expected true or false, got '" + raw.text + "'");
}

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path path(p);
  if (p.empty() || path.is_absolute() || base.empty()) return path;
  return (base / path).lexically_normal();
}

MovieInputs& movie_slot(Config& cfg, const std::string& id) {
  const auto it = std::find_if(cfg.movies.begin(), cfg.movies.end(), [&](const auto& m) { return m.id == id; });
  if (it != cfg.movies.end()) return *it;
  MovieInputs fresh;
  fresh.id = id;
  cfg.movies.push_back(std::move(fresh));
  std::sort(cfg.movies.begin(), cfg.movies.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return *std::find_if(cfg.movies.begin(), cfg.movies.end(), [&](const auto& m) { return m.id == id; });
}

bool valid_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

void set_value(Config& cfg, const std::string& path, const Raw& raw, const std::filesystem::path& base) {
  if (path.rfind("movie.", 0) == 0) {
    const auto dot = path.rfind('.');
    const std::string id = path.substr(6, dot > 6 ? dot - 6 : 0);
    const std::string key = path.substr(dot + 1);
    if (dot <= 6 || !valid_id(id)) fail(ErrorKind::BadConfig, path);
    if (std::find(movie_keys().begin(), movie_keys().end(), key) == movie_keys().end())
      fail(ErrorKind::BadConfig, path);
    auto& m = movie_slot(cfg, id);
    if (key == "duration_sec") {
      const double d = to_number(raw, path);
      if (!(d > 0.0)) fail(ErrorKind::BadConfig, path + ": must be positive");
      m.duration_sec = d;
      return;
    }
    const auto p = resolve(raw.text, base);
    if (key == "movie_wav") m.movie_wav = p;
    else if (key == "ad_wav") m.ad_wav = p;
    else if (key == "ad_transcript") m.ad_transcript = p;
    else if (key == "srt") m.srt = p;
    else m.script = p;
    return;
  }

  const auto& table = key_table();
  const auto it = table.find(path);
  if (it == table.end()) fail(ErrorKind::BadConfig, path);
  const Key& k = it->second;
  switch (k.type) {
    case Type::Number: k.set_number(cfg, to_number(raw, path)); break;
    case Type::Integer: k.set_integer(cfg, to_integer(raw, path)); break;
    case Type::Boolean: k.set_bool(cfg, to_bool(raw, path)); break;
    case Type::String: k.set_string(cfg, raw.text); break;
    case Type::Path: k.set_string(cfg, resolve(raw.text, base).string()); break;
  }
}

void check(const Config& c) {
  auto need = [](bool ok, const char* key, const char* what) {
    if (!ok) fail(ErrorKind::BadConfig, std::string(key) + ": " + what);
  };
  const auto& p = c.pipeline;
  need(p.frame_sec > 0.0, "audio.frame_sec", "must be positive");
  need(p.hop_sec > 0.0, "audio.hop_sec", "must be positive");
  need(p.sync.max_lag_sec > 0.0, "sync.max_lag_sec", "must be positive");
  need(p.sync.low_confidence_ratio >= 1.0, "sync.low_confidence_ratio", "must be >= 1");
  need(p.side_gain >= 0.0, "isolate.side_gain", "must be >= 0");
  need(p.nlms.taps >= 1, "nlms.taps", "must be >= 1");
  need(p.nlms.mu > 0.0 && p.nlms.mu < 2.0, "nlms.mu", "must lie in (0, 2)");
  need(p.nlms.eps > 0.0, "nlms.eps", "must be positive");
  need(p.threshold >= 0.0, "segment.threshold", "must be >= 0 (0 selects the automatic threshold)");
  need(p.quantile >= 0.0 && p.quantile <= 1.0, "segment.quantile", "must lie in [0, 1]");
  need(p.factor > 0.0, "segment.factor", "must be positive");
  need(p.threshold_floor >= 0.0, "segment.threshold_floor", "must be >= 0");
  need(p.min_seg_sec >= 0.0, "segment.min_seg_sec", "must be >= 0");
  need(p.min_gap_sec >= 0.0, "segment.min_gap_sec", "must be >= 0");
  need(p.pad_end_sec >= 0.0, "segment.pad_end_sec", "must be >= 0");
  need(c.align.gap >= 0.0, "align.gap", "must be >= 0");
  need(c.infer.edge_span_sec >= 0.0, "align.edge_span_sec", "must be >= 0");
  need(c.intro_outro_sec >= 0.0, "corpus.intro_outro_sec", "must be >= 0");
  need(c.min_clip_sec > 0.0, "corpus.min_clip_sec", "must be positive");
  need(c.mode == "auto" || c.mode == "semi", "pipeline.mode", "must be auto or semi");
  need(c.workers >= 1, "pipeline.workers", "must be >= 1");
}

Raw split_value(std::string_view v, const std::string& key) {
  if (!v.empty() && v.front() == '"') {
    std::size_t i = 1;
    for (; i < v.size(); ++i) {
      if (v[i] == '\\') {
        ++i;
        continue;
      }
      if (v[i] == '"') break;
    }
    if (i >= v.size()) fail(ErrorKind::BadConfig, key + ": unterminated string");
    const auto rest = text::trim(v.substr(i + 1));
    if (!rest.empty() && rest.front() != '#') fail(ErrorKind::BadConfig, key + ": trailing characters after string");
    return {unescape(v.substr(1, i - 1), key), true};
  }
  const auto hash = v.find('#');
  return {text::trim(v.substr(0, hash)), false};
}

}  // namespace

Config parse_config(std::string_view input, const std::filesystem::path& base_dir) {
  Config cfg;
  std::string section;
  std::istringstream in{std::string(input)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const std::string where = "line " + std::to_string(line_no);
    if (t.front() == '[') {
      const auto close = t.find(']');
      if (close == std::string::npos) fail(ErrorKind::BadConfig, where + ": unterminated section header");
      const auto rest = text::trim(std::string_view(t).substr(close + 1));
      if (!rest.empty() && rest.front() != '#') fail(ErrorKind::BadConfig, where + ": text after section header");
      section = text::trim(std::string_view(t).substr(1, close - 1));
      const bool known = section.rfind("movie.", 0) == 0
                             ? valid_id(std::string_view(section).substr(6))
                             : std::any_of(key_table().begin(), key_table().end(), [&](const auto& kv) {
                                 return kv.first.rfind(section + ".", 0) == 0;
                               });
      if (!known) fail(ErrorKind::BadConfig, section);
      if (section.rfind("movie.", 0) == 0) movie_slot(cfg, section.substr(6));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::BadConfig, where + ": expected key = value");
    const std::string key = text::trim(std::string_view(t).substr(0, eq));
    if (key.empty()) fail(ErrorKind::BadConfig, where + ": empty key");
    const std::string path = section.empty() ? key : section + "." + key;
    const Raw raw = split_value(text::trim(std::string_view(t).substr(eq + 1)), path);
    set_value(cfg, path, raw, base_dir);
  }
  check(cfg);
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

void apply_override(Config& cfg, std::string_view key_path, std::string_view value) {
  const std::string key(key_path);
  Raw raw;
  const std::string v = text::trim(value);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    raw = {unescape(std::string_view(v).substr(1, v.size() - 2), key), false};
  else
    raw = {v, false};
  set_value(cfg, key, raw, {});
  check(cfg);
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const auto& [k, v] : key_table()) out.push_back(k);
  return out;
}

std::string to_text(const Config& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& [path, key] : key_table()) {
    const auto dot = path.find('.');
    const std::string s = path.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << '\n';
      out << '[' << s << "]\n";
      section = s;
    }
    out << path.substr(dot + 1) << " = " << key.get(cfg) << '\n';
  }
  for (const auto& m : cfg.movies) {
    out << "\n[movie." << m.id << "]\n";
    auto put = [&](const char* k, const std::filesystem::path& p) {
      if (!p.empty()) out << k << " = " << quote(p.string()) << '\n';
    };
    put("movie_wav", m.movie_wav);
    put("ad_wav", m.ad_wav);
    put("ad_transcript", m.ad_transcript);
    put("srt", m.srt);
    put("script", m.script);
    if (m.duration_sec) out << "duration_sec = " << fmt_number(*m.duration_sec) << '\n';
  }
  return out.str();
}

}  // namespace adcorpus::config
