#ifndef TERMEX_TOKENIZE_HPP
#define TERMEX_TOKENIZE_HPP

// Rule-based tokenizer and sentence splitter for Russian scientific text.
// Hyphenated Latin/Cyrillic compounds ("web-сервис", "n-грамма") stay single
// tokens, punctuation is split off, decimal numbers ("2.43") stay whole, and
// sentence breaks at . ! ? respect an abbreviation list ("т.д.", "рис.", ...).

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "termex/corpus.hpp"
#include "termex/text.hpp"

namespace termex {

struct TokenizerConfig {
  bool keep_hyphenated = true;
  std::set<std::string> abbreviations;  // entries end with '.', e.g. "т.д."
  std::set<char32_t> sentence_terminators = {U'.', U'!', U'?'};

  static TokenizerConfig defaults() {
    TokenizerConfig c;
    c.abbreviations = {"т.д.", "т.е.", "т.п.", "т.к.", "др.", "пр.",
                       "рис.", "табл.", "см.", "ср.", "напр."};
    return c;
  }
};

// Unicode-aware case folding for the Latin and Cyrillic ranges; no other
// transformation. Shared normalization for dictionary matching and features.
inline std::string lowercase_normalize(std::string_view token_text) {
  return fold_case(token_text);
}

namespace detail {

struct AbbrevMatcher {
  // folded codepoint sequences, longest first
  std::vector<std::vector<char32_t>> entries;

  explicit AbbrevMatcher(const std::set<std::string>& abbrevs) {
    for (const std::string& a : abbrevs) {
      if (a.empty() || a.back() != '.') continue;  // entries must end with '.'
      std::vector<char32_t> cps;
      for (const Codepoint& c : decode_utf8(a)) cps.push_back(fold_case(c.value));
      if (!cps.empty()) entries.push_back(std::move(cps));
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.size() > b.size(); });
  }

  // Length in codepoints of the longest abbreviation starting at cps[i], or 0.
  std::size_t match(const std::vector<Codepoint>& cps, std::size_t i) const {
    for (const auto& e : entries) {
      if (i + e.size() > cps.size()) continue;
      bool ok = true;
      for (std::size_t k = 0; k < e.size(); ++k)
        if (fold_case(cps[i + k].value) != e[k]) { ok = false; break; }
      if (ok) return e.size();
    }
    return 0;
  }
};

}  // namespace detail

inline std::vector<Sentence> tokenize(std::string_view text,
                                      const TokenizerConfig& config = TokenizerConfig::defaults()) {
  const std::vector<Codepoint> cps = decode_utf8(text);
  const detail::AbbrevMatcher abbrevs(config.abbreviations);

  std::vector<Sentence> sentences;
  Sentence current;
  bool pending_break = false;

  auto flush_sentence = [&] {
    if (!current.tokens.empty()) sentences.push_back(std::move(current));
    current = Sentence{};
    pending_break = false;
  };
  auto emit = [&](std::size_t i, std::size_t j, bool is_terminator) {
    if (pending_break && !is_terminator) flush_sentence();
    const std::size_t b = cps[i].byte_pos;
    const std::size_t e = cps[j - 1].byte_pos + cps[j - 1].byte_len;
    current.tokens.push_back({std::string(text.substr(b, e - b)), b, e});
    if (is_terminator) pending_break = true;
  };

  const std::size_t n = cps.size();
  std::size_t i = 0;
  while (i < n) {
    const char32_t c = cps[i].value;
    if (is_space(c)) { ++i; continue; }
    if (is_word_char(c)) {
      if (is_letter(c)) {
        if (const std::size_t len = abbrevs.match(cps, i);
            len > 0 && (i + len == n || !is_word_char(cps[i + len].value))) {
          emit(i, i + len, false);
          i += len;
          continue;
        }
      }
      std::size_t j = i + 1;
      while (j < n) {
        const char32_t cj = cps[j].value;
        if (is_word_char(cj)) { ++j; continue; }
        if (config.keep_hyphenated && cj == U'-' && j + 1 < n &&
            is_word_char(cps[j + 1].value)) { j += 2; continue; }
        if ((cj == U'.' || cj == U',') && j + 1 < n && is_ascii_digit(cps[j - 1].value) &&
            is_ascii_digit(cps[j + 1].value)) { j += 2; continue; }
        break;
      }
      emit(i, j, false);
      i = j;
    } else {
      emit(i, i + 1, config.sentence_terminators.count(c) > 0);
      ++i;
    }
  }
  flush_sentence();
  return sentences;
}

}  // namespace termex

#endif  // TERMEX_TOKENIZE_HPP
