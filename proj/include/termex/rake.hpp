#ifndef TERMEX_RAKE_HPP
#define TERMEX_RAKE_HPP

// RAKE keyword extraction: stopword/delimiter splitting into candidate
// phrases, deg/freq word scoring, automatic stopword induction, optional
// verb removal, and projection of kept phrases back to term spans.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "termex/corpus.hpp"
#include "termex/dictionary.hpp"
#include "termex/tokenize.hpp"

namespace termex {

struct StopwordList {
  enum class Source : std::uint8_t { Provided, AutoExtracted };

  std::unordered_set<std::string> words;  // single normalized tokens
  Source source = Source::Provided;

  bool contains(const std::string& normalized) const { return words.count(normalized) > 0; }
};

struct RakeConfig {
  std::size_t max_phrase_len = 4;
  std::size_t min_chars = 2;        // per token, in codepoints
  double top_fraction = 1.0 / 3.0;  // share of ranked phrases kept as terms
  std::size_t auto_stopwords_n = 100;
  bool verb_filter_enabled = false;

  void check() const {
    if (max_phrase_len < 1) throw ValidityError("max_phrase_len must be at least 1");
    if (!(top_fraction > 0.0 && top_fraction <= 1.0))
      throw ValidityError("top_fraction must be in (0, 1]");
  }
};

struct PhraseOccurrence {
  std::size_t doc_index = 0;
  TermSpan span;
  auto operator<=>(const PhraseOccurrence&) const = default;
};

struct PhraseScore {
  std::vector<std::string> tokens;  // normalized
  double score = 0.0;
  std::vector<PhraseOccurrence> occurrences;
};

inline bool is_alphabetic_token(std::string_view text) {
  bool any = false;
  for (const Codepoint& c : decode_utf8(text)) {
    if (!is_letter(c.value)) return false;
    any = true;
  }
  return any;
}

// The n most frequent alphabetic tokens (normalized), ties broken
// lexicographically. Punctuation never enters: it acts as a delimiter.
inline StopwordList auto_stopwords(const Corpus& corpus, std::size_t n) {
  if (corpus.empty()) throw ValidityError("auto_stopwords: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const Document& d : corpus)
    for (const Sentence& s : d.sentences)
      for (const Token& t : s.tokens)
        if (is_alphabetic_token(t.text)) ++freq[lowercase_normalize(t.text)];

  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  StopwordList out;
  out.source = StopwordList::Source::AutoExtracted;
  for (std::size_t i = 0; i < ranked.size() && i < n; ++i) out.words.insert(ranked[i].first);
  return out;
}

struct RakeCandidate {
  std::vector<std::string> tokens;  // normalized
  TermSpan span;
};

// Splits the sentence at stopwords and punctuation tokens; each maximal
// remaining run of length <= max_phrase_len whose tokens all have at least
// min_chars codepoints becomes a candidate. Longer or short-token runs are
// discarded whole.
inline std::vector<RakeCandidate> candidate_phrases(const Sentence& sentence,
                                                    std::size_t sent_index,
                                                    const StopwordList& stopwords,
                                                    const RakeConfig& config) {
  std::vector<RakeCandidate> out;
  const std::size_t n = sentence.size();
  std::size_t i = 0;
  while (i < n) {
    const std::string norm = lowercase_normalize(sentence.tokens[i].text);
    if (is_punctuation_token(sentence.tokens[i].text) || stopwords.contains(norm)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    std::vector<std::string> run;
    bool all_long_enough = true;
    while (j < n) {
      const std::string nj = lowercase_normalize(sentence.tokens[j].text);
      if (is_punctuation_token(sentence.tokens[j].text) || stopwords.contains(nj)) break;
      all_long_enough &= codepoint_count(sentence.tokens[j].text) >= config.min_chars;
      run.push_back(nj);
      ++j;
    }
    if (run.size() <= config.max_phrase_len && all_long_enough && !run.empty())
      out.push_back({std::move(run), TermSpan{sent_index, i, j}});
    i = j;
  }
  return out;
}

struct VerbFilterResult {
  Sentence sentence;                    // verb tokens removed, offsets kept
  std::vector<std::size_t> orig_index;  // filtered position -> original position
};

inline const std::vector<std::string>& russian_verb_suffixes() {
  static const std::vector<std::string> kSuffixes = {"ться", "лся", "ть",  "ет",
                                                     "ют",   "ла",  "ем", "им"};
  return kSuffixes;
}

// Approximate: lexicon lookup plus an optional Russian verb-ending heuristic
// on tokens of at least 4 codepoints. Lexicon takes precedence.
inline bool looks_like_verb(std::string_view token_text,
                            const std::unordered_set<std::string>& verb_lexicon,
                            bool heuristic_enabled) {
  const std::string norm = lowercase_normalize(token_text);
  if (verb_lexicon.count(norm)) return true;
  if (!heuristic_enabled) return false;
  if (codepoint_count(norm) < 4) return false;
  for (const std::string& suf : russian_verb_suffixes())
    if (norm.size() > suf.size() && norm.compare(norm.size() - suf.size(), suf.size(), suf) == 0)
      return true;
  return false;
}

inline VerbFilterResult filter_verbs(const Sentence& sentence,
                                     const std::unordered_set<std::string>& verb_lexicon,
                                     bool heuristic_enabled) {
  VerbFilterResult out;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (looks_like_verb(sentence.tokens[i].text, verb_lexicon, heuristic_enabled)) continue;
    out.sentence.tokens.push_back(sentence.tokens[i]);
    out.orig_index.push_back(i);
  }
  return out;
}

// deg(w) = sum of containing-candidate lengths, freq(w) = candidate
// occurrences of w; word score deg/freq; phrase score = sum over its tokens.
// Identical phrases merge, occurrence lists concatenate. Ranked by score
// descending, ties lexicographic.
inline std::vector<PhraseScore> score_phrases(
    const std::vector<std::pair<std::size_t, RakeCandidate>>& corpus_candidates) {
  std::unordered_map<std::string, double> freq, deg;
  for (const auto& [doc, cand] : corpus_candidates) {
    const double len = static_cast<double>(cand.tokens.size());
    for (const std::string& w : cand.tokens) {
      freq[w] += 1.0;
      deg[w] += len;
    }
  }

  std::unordered_map<std::string, std::size_t> index;
  std::vector<PhraseScore> phrases;
  for (const auto& [doc, cand] : corpus_candidates) {
    std::string key;
    for (std::size_t i = 0; i < cand.tokens.size(); ++i) {
      if (i) key += ' ';
      key += cand.tokens[i];
    }
    auto [it, added] = index.try_emplace(std::move(key), phrases.size());
    if (added) {
      PhraseScore ps;
      ps.tokens = cand.tokens;
      for (const std::string& w : cand.tokens) ps.score += deg[w] / freq[w];
      phrases.push_back(std::move(ps));
    }
    phrases[it->second].occurrences.push_back({doc, cand.span});
  }

  std::sort(phrases.begin(), phrases.end(), [](const PhraseScore& a, const PhraseScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tokens < b.tokens;
  });
  return phrases;
}

// Greedy occurrence marking in (score-descending, lexicographic) phrase
// order: an occurrence is dropped when it overlaps an already kept span.
inline std::vector<std::vector<TermSpan>> mark_nonoverlapping(
    const std::vector<PhraseScore>& ranked_kept, std::size_t n_docs) {
  std::vector<std::vector<TermSpan>> per_doc(n_docs);
  for (const PhraseScore& ps : ranked_kept) {
    for (const PhraseOccurrence& occ : ps.occurrences) {
      bool clash = false;
      for (const TermSpan& kept : per_doc[occ.doc_index])
        if (kept.overlaps(occ.span)) { clash = true; break; }
      if (!clash) per_doc[occ.doc_index].push_back(occ.span);
    }
  }
  for (auto& spans : per_doc) std::sort(spans.begin(), spans.end());
  return per_doc;
}

struct VerbResources {
  std::unordered_set<std::string> lexicon;  // normalized verb forms
  bool heuristic_enabled = false;
};

struct RakeResult {
  std::vector<PhraseScore> phrases;             // full ranking
  std::vector<std::vector<TermSpan>> spans_per_doc;  // kept predictions
};

// Full pipeline: (optional verb removal) -> candidates -> scoring -> keep the
// top ceil(top_fraction * #distinct phrases) -> mark every occurrence of the
// kept phrases in original token coordinates. Verb removal runs when
// config.verb_filter_enabled is set and resources are given.
inline RakeResult rake_extract(const Corpus& corpus, const StopwordList& stopwords,
                               const RakeConfig& config,
                               const VerbResources* verbs = nullptr) {
  config.check();
  const bool filter = config.verb_filter_enabled && verbs != nullptr;
  std::vector<std::pair<std::size_t, RakeCandidate>> all;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (std::size_t s = 0; s < corpus[d].sentences.size(); ++s) {
      const Sentence& orig = corpus[d].sentences[s];
      if (filter) {
        const VerbFilterResult fr = filter_verbs(orig, verbs->lexicon, verbs->heuristic_enabled);
        for (RakeCandidate cand : candidate_phrases(fr.sentence, s, stopwords, config)) {
          // A candidate crossing removed tokens maps to the covering span.
          cand.span.start = fr.orig_index[cand.span.start];
          cand.span.end = fr.orig_index[cand.span.end - 1] + 1;
          all.emplace_back(d, std::move(cand));
        }
      } else {
        for (RakeCandidate& cand : candidate_phrases(orig, s, stopwords, config))
          all.emplace_back(d, std::move(cand));
      }
    }
  }

  RakeResult result;
  result.phrases = score_phrases(all);
  const std::size_t kept =
      std::min(result.phrases.size(),
               static_cast<std::size_t>(
                   std::ceil(config.top_fraction * static_cast<double>(result.phrases.size()))));
  const std::vector<PhraseScore> top(result.phrases.begin(), result.phrases.begin() + kept);
  result.spans_per_doc = mark_nonoverlapping(top, corpus.size());
  return result;
}

}  // namespace termex

#endif  // TERMEX_RAKE_HPP
