#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace adcorpus::text {

/// ASCII lowercase; bytes outside ASCII pass through.
std::string to_lower(std::string_view s);

std::string trim(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

/// Removes leading and trailing ASCII punctuation.
std::string strip_punct(std::string_view token);

/// Corpus and metric tokenization: lowercase, whitespace split, edge
/// punctuation stripped, empty tokens dropped.
std::vector<std::string> tokens(std::string_view sentence);

/// Tokens joined by single spaces; the key for exact sentence matching.
std::string normalized(std::string_view sentence);

/// Word normalization for subtitle/script matching: lowercase, split on any
/// character that is not alphanumeric or an apostrophe, apostrophes kept
/// only inside words.
std::vector<std::string> match_words(std::string_view s);

/// Splits on '.', '!' or '?' followed by whitespace. Terminators stay with
/// their sentence; pieces are trimmed and empties dropped.
std::vector<std::string> split_sentences(std::string_view s);

/// Porter (1980) suffix-stripping stemmer on a lowercase ASCII word.
std::string porter_stem(std::string_view word);

}  // namespace adcorpus::text
