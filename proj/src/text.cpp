#include "crpo/text.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace crpo {

std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string canonical_text(std::string_view s) {
    return std::string(trim(s));
}

long round_half_up(double x) {
    return static_cast<long>(std::floor(x + 0.5));
}

namespace {

// A small English function-word list; DSI stopword removal is off by default.
constexpr std::array<std::string_view, 48> kStopwords = {
    "a",    "an",   "and",  "are",  "as",   "at",   "be",   "but",
    "by",   "for",  "from", "had",  "has",  "have", "he",   "her",
    "his",  "i",    "if",   "in",   "is",   "it",   "its",  "me",
    "my",   "no",   "not",  "of",   "on",   "or",   "our",  "she",
    "so",   "that", "the",  "their", "then", "they", "this", "to",
    "was",  "we",   "were", "will", "with", "you",  "your", "them",
};

inline bool is_word_byte(unsigned char c) {
    return std::isalnum(c) || c >= 0x80;
}

}  // namespace

bool is_stopword(std::string_view word) {
    for (auto w : kStopwords)
        if (w == word) return true;
    return false;
}

std::vector<std::string> unique_words(std::string_view text, bool remove_stopwords) {
    std::vector<std::string> words;
    std::unordered_set<std::string> seen;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        if (!(remove_stopwords && is_stopword(cur)) && seen.insert(cur).second)
            words.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (is_word_byte(c)) {
            cur.push_back(std::isupper(c) ? static_cast<char>(std::tolower(c))
                                          : static_cast<char>(c));
        } else {
            flush();
        }
    }
    flush();
    return words;
}

}  // namespace crpo
