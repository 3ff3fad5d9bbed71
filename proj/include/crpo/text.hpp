#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crpo {

// Strips leading/trailing ASCII whitespace.
std::string_view trim(std::string_view s);

// Canonical form used for grouping keys and cache keys: trimmed text,
// bytes passed through unchanged (non-ASCII content is byte-transparent).
std::string canonical_text(std::string_view s);

// Rounds half-up to the nearest integer (2.5 -> 3, -2.5 -> -2).
long round_half_up(double x);

// Splits a text into its unique words, lowercased (ASCII), in order of
// first occurrence. A word is a maximal run of ASCII alphanumerics and/or
// non-ASCII bytes; ASCII punctuation and whitespace separate words.
std::vector<std::string> unique_words(std::string_view text,
                                      bool remove_stopwords = false);

bool is_stopword(std::string_view word);

}  // namespace crpo
