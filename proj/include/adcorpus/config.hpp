#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adcorpus/segment.hpp"
#include "adcorpus/textalign.hpp"

namespace adcorpus::config {

/// Inputs for one movie. Relative paths are resolved against the config
/// file's directory.
struct MovieInputs {
  std::string id;
  std::filesystem::path movie_wav;
  std::filesystem::path ad_wav;
  std::filesystem::path ad_transcript;  // one sentence per detected segment
  std::filesystem::path srt;
  std::filesystem::path script;
  std::optional<double> duration_sec;
};

struct Config {
  segment::PipelineConfig pipeline;  // [audio] [sync] [isolate] [nlms] [segment]

  textalign::AlignParams align;      // [align]
  double min_score = 0.5;
  textalign::InferParams infer;

  double intro_outro_sec = 0.0;      // [corpus]
  double min_clip_sec = 2.0;
  std::filesystem::path names;
  std::filesystem::path drop_patterns;
  std::filesystem::path assignment;

  std::filesystem::path out_dir = "out";  // [pipeline]
  std::string mode = "auto";              // auto | semi
  int workers = 1;
  bool strict = false;

  std::vector<MovieInputs> movies;  // [movie.<id>], sorted by id
};

/// Parses the sectioned key = value format. Values are numbers, true/false
/// or double-quoted strings; '#' starts a comment. Throws BadConfig naming
/// the key path.
Config parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
Config load_config(const std::filesystem::path& path);

/// Sets "section.key" (or "movie.<id>.key") from its textual value; quotes
/// around strings are optional. Throws BadConfig.
void apply_override(Config& cfg, std::string_view key_path, std::string_view value);

/// Every settable "section.key" outside [movie.*], sorted.
std::vector<std::string> known_keys();

/// Canonical text form; parse_config(to_text(c)) == c for every field.
std::string to_text(const Config& cfg);

}  // namespace adcorpus::config
