#include "adcorpus/textalign.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <regex>
#include <sstream>

#include "adcorpus/error.hpp"
#include "adcorpus/text.hpp"

namespace adcorpus::textalign {

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      lines.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      lines.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) lines.push_back(std::move(cur));
  return lines;
}

std::string_view strip_bom(std::string_view text) {
  if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF && static_cast<unsigned char>(text[1]) == 0xBB &&
      static_cast<unsigned char>(text[2]) == 0xBF)
    text.remove_prefix(3);
  return text;
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

std::string strip_tags(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '<') {
      const auto close = s.find('>', i + 1);
      if (close != std::string_view::npos) {
        i = close + 1;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// SRT

std::optional<double> parse_timecode(std::string_view s) {
  static const std::regex re(R"(^\s*(\d+):(\d{1,2}):(\d{1,2})[,.](\d{1,3})\s*$)");
  std::cmatch m;
  if (!std::regex_match(s.data(), s.data() + s.size(), m, re)) return std::nullopt;
  const long h = std::stol(m[1].str());
  const long mi = std::stol(m[2].str());
  const long se = std::stol(m[3].str());
  std::string frac = m[4].str();
  if (mi >= 60 || se >= 60) return std::nullopt;
  while (frac.size() < 3) frac.push_back('0');
  const long ms = std::stol(frac);
  return static_cast<double>(h * 3600000 + mi * 60000 + se * 1000 + ms) / 1000.0;
}

std::string format_timecode(double seconds) {
  const long long total = std::llround(std::max(0.0, seconds) * 1000.0);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%02lld:%02lld:%02lld,%03lld", total / 3600000, (total / 60000) % 60,
                (total / 1000) % 60, total % 1000);
  return buf;
}

SrtParse parse_srt(std::string_view raw) {
  const auto lines = split_lines(strip_bom(raw));
  SrtParse out;

  struct Block {
    std::size_t first_line;
    std::vector<std::string> lines;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) continue;
    if (i == 0 || blank(lines[i - 1]) || blocks.empty())
      blocks.push_back({i + 1, {}});
    blocks.back().lines.push_back(lines[i]);
  }
  if (blocks.empty()) fail(ErrorKind::EmptyFile, "no subtitle blocks");

  static const std::regex arrow(R"(^\s*(\S+)\s*-->\s*(\S+)(\s.*)?$)");
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    auto warn = [&](const std::string& why) {
      out.warnings.push_back("block " + std::to_string(b + 1) + " (line " + std::to_string(blk.first_line) + "): " + why);
    };
    const std::string idx = text::trim(blk.lines[0]);
    if (idx.empty() || !std::all_of(idx.begin(), idx.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      warn("bad index line '" + idx + "'");
      continue;
    }
    if (blk.lines.size() < 2) {
      warn("missing timecode line");
      continue;
    }
    std::smatch m;
    if (!std::regex_match(blk.lines[1], m, arrow)) {
      warn("bad timecode line '" + text::trim(blk.lines[1]) + "'");
      continue;
    }
    const auto start = parse_timecode(m[1].str());
    const auto end = parse_timecode(m[2].str());
    if (!start || !end) {
      warn("bad timecode line '" + text::trim(blk.lines[1]) + "'");
      continue;
    }
    if (!(*start < *end)) {
      warn("end before start");
      continue;
    }
    std::string body;
    for (std::size_t i = 2; i < blk.lines.size(); ++i) {
      const auto line = text::trim(strip_tags(blk.lines[i]));
      if (line.empty()) continue;
      if (!body.empty()) body.push_back('\n');
      body += line;
    }
    if (body.empty()) {
      warn("no text");
      continue;
    }
    out.subtitles.push_back({std::stoi(idx), *start, *end, std::move(body)});
  }
  std::stable_sort(out.subtitles.begin(), out.subtitles.end(),
                   [](const Subtitle& a, const Subtitle& b) { return a.start_sec < b.start_sec; });
  return out;
}

std::string serialize_srt(const std::vector<Subtitle>& subs) {
  std::string out;
  for (const auto& s : subs) {
    out += std::to_string(s.index) + "\n";
    out += format_timecode(s.start_sec) + " --> " + format_timecode(s.end_sec) + "\n";
    out += s.text + "\n\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scripts

std::string_view to_string(ElementKind k) noexcept {
  switch (k) {
    case ElementKind::SceneHeading: return "scene_heading";
    case ElementKind::Dialogue: return "dialogue";
    case ElementKind::Description: return "description";
  }
  return "description";
}

namespace {

int indent_of(std::string_view line, int tab_width) {
  int n = 0;
  for (const char c : line) {
    if (c == ' ')
      ++n;
    else if (c == '\t')
      n += tab_width - (n % tab_width);
    else
      break;
  }
  return n;
}

bool all_caps(std::string_view s) {
  bool upper = false;
  for (const char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (std::islower(u)) return false;
    if (std::isupper(u)) upper = true;
  }
  return upper;
}

bool parenthetical(std::string_view s) { return s.size() >= 2 && s.front() == '(' && s.back() == ')'; }

bool transition(std::string_view s) {
  if (!all_caps(s)) return false;
  return s.ends_with("TO:") || s.starts_with("FADE") || s == "CONTINUED:" || s == "(CONTINUED)" ||
         s == "CONTINUED";
}

std::string speaker_name(std::string_view cue) {
  std::string s(cue);
  const auto paren = s.find('(');
  if (paren != std::string::npos) s.erase(paren);
  return text::trim(s);
}

}  // namespace

std::vector<ScriptElement> parse_script(std::string_view raw, const ScriptFormatHints& hints) {
  const auto lines = split_lines(strip_bom(raw));
  int base = -1;
  for (const auto& l : lines)
    if (!blank(l)) base = base < 0 ? indent_of(l, hints.tab_width) : std::min(base, indent_of(l, hints.tab_width));
  if (base < 0) fail(ErrorKind::EmptyFile, "script has no text");
  const int dialogue_indent = hints.dialogue_min_indent >= 0 ? hints.dialogue_min_indent : base + 1;

  std::vector<ScriptElement> out;
  auto push = [&](ElementKind k, std::optional<std::string> speaker, std::string body) {
    out.push_back({k, std::move(speaker), std::move(body), out.size()});
  };
  std::string paragraph;
  auto flush = [&] {
    for (auto& s : text::split_sentences(paragraph)) push(ElementKind::Description, std::nullopt, std::move(s));
    paragraph.clear();
  };
  auto is_dialogue_line = [&](std::size_t i) {
    return i < lines.size() && !blank(lines[i]) && indent_of(lines[i], hints.tab_width) >= dialogue_indent;
  };

  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (blank(lines[i])) {
      flush();
      continue;
    }
    const std::string t = text::trim(lines[i]);

    if (std::any_of(hints.scene_prefixes.begin(), hints.scene_prefixes.end(),
                    [&](const std::string& p) { return t.starts_with(p); })) {
      flush();
      push(ElementKind::SceneHeading, std::nullopt, t);
      continue;
    }

    if (all_caps(t) && !t.ends_with(":") && is_dialogue_line(i + 1)) {
      flush();
      std::string speech;
      std::size_t j = i + 1;
      for (; is_dialogue_line(j); ++j) {
        const std::string d = text::trim(lines[j]);
        if (parenthetical(d)) continue;
        if (!speech.empty()) speech.push_back(' ');
        speech += d;
      }
      if (!speech.empty()) push(ElementKind::Dialogue, speaker_name(t), std::move(speech));
      i = j - 1;
      continue;
    }

    if (hints.drop_transitions && transition(t)) {
      flush();
      continue;
    }

    if (!paragraph.empty()) paragraph.push_back(' ');
    paragraph += t;
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Alignment

double word_match_ratio(std::string_view dialogue, std::string_view subtitle) {
  const auto dw = text::match_words(dialogue);
  if (dw.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& w : text::match_words(subtitle)) ++counts[w];
  std::size_t hit = 0;
  for (const auto& w : dw) {
    auto it = counts.find(w);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++hit;
    }
  }
  return static_cast<double>(hit) / static_cast<double>(dw.size());
}

Alignment align_dialogue(const std::vector<ScriptElement>& elements, const std::vector<Subtitle>& subs,
                         const AlignParams& params) {
  std::vector<const ScriptElement*> dlg;
  for (const auto& e : elements)
    if (e.kind == ElementKind::Dialogue) dlg.push_back(&e);
  if (dlg.empty() || subs.empty()) fail(ErrorKind::EmptyInput, "alignment needs dialogue and subtitles");

  const std::size_t D = dlg.size(), S = subs.size();
  const double gap = params.gap;
  std::vector<std::vector<double>> ratio(D, std::vector<double>(S));
  for (std::size_t i = 0; i < D; ++i)
    for (std::size_t j = 0; j < S; ++j) ratio[i][j] = word_match_ratio(dlg[i]->text, subs[j].text);

  enum Move : unsigned char { Match, SkipDialogue, SkipSubtitle };
  std::vector<std::vector<double>> score(D + 1, std::vector<double>(S + 1, 0.0));
  std::vector<std::vector<Move>> move(D + 1, std::vector<Move>(S + 1, Match));
  for (std::size_t i = 1; i <= D; ++i) {
    score[i][0] = score[i - 1][0] - gap;
    move[i][0] = SkipDialogue;
  }
  for (std::size_t j = 1; j <= S; ++j) {
    score[0][j] = score[0][j - 1] - gap;
    move[0][j] = SkipSubtitle;
  }
  for (std::size_t i = 1; i <= D; ++i) {
    for (std::size_t j = 1; j <= S; ++j) {
      double best = score[i - 1][j - 1] + ratio[i - 1][j - 1];
      Move how = Match;
      if (const double v = score[i - 1][j] - gap; v > best) {
        best = v;
        how = SkipDialogue;
      }
      if (const double v = score[i][j - 1] - gap; v > best) {
        best = v;
        how = SkipSubtitle;
      }
      score[i][j] = best;
      move[i][j] = how;
    }
  }

  Alignment out;
  out.total_score = score[D][S];
  std::size_t i = D, j = S;
  while (i > 0 || j > 0) {
    switch (move[i][j]) {
      case Match:
        out.pairs.push_back({dlg[i - 1]->ordinal, j - 1, subs[j - 1].index, ratio[i - 1][j - 1]});
        --i;
        --j;
        break;
      case SkipDialogue: --i; break;
      case SkipSubtitle: --j; break;
    }
  }
  std::reverse(out.pairs.begin(), out.pairs.end());
  return out;
}

std::string_view to_string(Source s) noexcept { return s == Source::Ad ? "ad" : "script"; }

Source source_from_string(std::string_view s) {
  if (s == "ad") return Source::Ad;
  if (s == "script") return Source::Script;
  fail(ErrorKind::Format, "unknown source '" + std::string(s) + "'");
}

std::vector<AlignedSentence> infer_timestamps(const Alignment& alignment, const std::vector<ScriptElement>& script,
                                              const std::vector<Subtitle>& subs, const std::string& movie_id,
                                              const InferParams& params) {
  std::vector<AlignedPair> anchors;
  for (const auto& p : alignment.pairs)
    if (p.ratio > 0.0) anchors.push_back(p);
  if (anchors.empty()) fail(ErrorKind::NoAnchors, "no dialogue matched any subtitle");
  std::sort(anchors.begin(), anchors.end(),
            [](const AlignedPair& a, const AlignedPair& b) { return a.dialogue_ordinal < b.dialogue_ordinal; });
  for (const auto& a : anchors)
    if (a.subtitle_pos >= subs.size()) fail(ErrorKind::BadParam, "alignment refers to a missing subtitle");

  // Group description elements by the anchor that follows them.
  std::map<std::size_t, std::vector<const ScriptElement*>> groups;  // key: index of next anchor (size() = none)
  for (const auto& e : script) {
    if (e.kind != ElementKind::Description) continue;
    const auto next = std::upper_bound(anchors.begin(), anchors.end(), e.ordinal,
                                       [](std::size_t ord, const AlignedPair& a) { return ord < a.dialogue_ordinal; });
    groups[static_cast<std::size_t>(next - anchors.begin())].push_back(&e);
  }

  std::vector<AlignedSentence> out;
  for (const auto& [next, members] : groups) {
    const AlignedPair* before = next > 0 ? &anchors[next - 1] : nullptr;
    const AlignedPair* after = next < anchors.size() ? &anchors[next] : nullptr;

    double lo = 0.0, hi = 0.0, score = 0.0;
    if (before && after) {
      const auto& pb = subs[before->subtitle_pos];
      const auto& pa = subs[after->subtitle_pos];
      lo = pb.end_sec;
      hi = pa.start_sec;
      if (!(hi > lo)) {
        lo = pb.start_sec;
        hi = pa.end_sec;
      }
      score = 0.5 * (before->ratio + after->ratio);
    } else if (after) {
      hi = subs[after->subtitle_pos].start_sec;
      lo = std::max(0.0, hi - params.edge_span_sec);
      if (!(hi > lo)) hi = lo + params.edge_span_sec;
      score = after->ratio;
    } else {
      lo = subs[before->subtitle_pos].end_sec;
      hi = lo + params.edge_span_sec;
      score = before->ratio;
    }

    std::vector<double> weight;
    double total = 0.0;
    for (const auto* e : members) {
      weight.push_back(static_cast<double>(std::max<std::size_t>(1, text::match_words(e->text).size())));
      total += weight.back();
    }
    double acc = 0.0;
    double start = lo;
    for (std::size_t k = 0; k < members.size(); ++k) {
      acc += weight[k];
      const double end = k + 1 == members.size() ? hi : lo + (hi - lo) * acc / total;
      out.push_back({members[k]->text, start, end, score, Source::Script, movie_id});
      start = end;
    }
  }
  return out;
}

std::pair<std::vector<AlignedSentence>, std::vector<AlignedSentence>> reliability_filter(
    const std::vector<AlignedSentence>& sentences, double min_score) {
  std::pair<std::vector<AlignedSentence>, std::vector<AlignedSentence>> out;
  for (const auto& s : sentences) (s.score >= min_score ? out.first : out.second).push_back(s);
  return out;
}

}  // namespace adcorpus::textalign
