#ifndef TERMEX_DICTIONARY_HPP
#define TERMEX_DICTIONARY_HPP

// Term dictionary: TF-IDF n-gram candidate mining, import from term-list
// files, greedy longest-match annotation and bulk auto-annotation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "termex/corpus.hpp"
#include "termex/tokenize.hpp"

namespace termex {

// Token with no letters and no digits (";", "—", "...").
inline bool is_punctuation_token(std::string_view text) {
  for (const Codepoint& c : decode_utf8(text))
    if (is_word_char(c.value)) return false;
  return true;
}

// Normalization hook for dictionary matching. Matching is on case-folded
// surface forms; a stemmer can be swapped in here, but none ships.
using TermNormalizer = std::string (*)(std::string_view);
inline std::string fold_term(std::string_view s) { return lowercase_normalize(s); }

struct NgramCandidate {
  std::vector<std::string> tokens;  // normalized, length 2..4
  std::size_t tf = 0;               // corpus-wide occurrence count
  std::size_t df = 0;               // number of documents containing it
  double tfidf = 0.0;               // tf * ln(N / df)

  std::string joined() const {
    std::string s;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) s += ' ';
      s += tokens[i];
    }
    return s;
  }
};

enum class TermSource : std::uint8_t { Mined, Imported };

inline std::string_view to_string(TermSource s) {
  return s == TermSource::Mined ? "mined" : "imported";
}

class TermDictionary {
 public:
  // Returns false when the entry was already present (duplicates merge,
  // first provenance wins).
  bool insert(const std::vector<std::string>& tokens, TermSource source) {
    if (tokens.empty()) return false;
    std::string key;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) key += ' ';
      key += tokens[i];
    }
    auto [it, added] = entries_.emplace(std::move(key), source);
    if (added) max_len_ = std::max(max_len_, tokens.size());
    return added;
  }

  bool contains(const std::string& joined_normalized) const {
    return entries_.count(joined_normalized) > 0;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_token_len() const { return max_len_; }

  // Sorted view for deterministic persistence.
  std::vector<std::pair<std::string, TermSource>> sorted_entries() const {
    std::vector<std::pair<std::string, TermSource>> out(entries_.begin(), entries_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::unordered_map<std::string, TermSource> entries_;
  std::size_t max_len_ = 0;
};

// All within-sentence n-grams of lengths [n_min, n_max] over normalized
// token forms, ranked by tf * ln(N/df) descending, ties lexicographic.
// N-grams containing punctuation tokens are excluded.
inline std::vector<NgramCandidate> mine_candidates(const Corpus& corpus, std::size_t n_min = 2,
                                                   std::size_t n_max = 4) {
  if (corpus.empty()) throw ValidityError("mine_candidates: empty corpus");
  if (n_min == 0 || n_min > n_max) throw ValidityError("mine_candidates: bad n-gram range");

  struct Counts {
    std::size_t tf = 0;
    std::size_t df = 0;
    std::size_t last_doc = static_cast<std::size_t>(-1);
  };
  std::unordered_map<std::string, Counts> counts;
  std::unordered_map<std::string, std::vector<std::string>> tokens_of;

  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (const Sentence& sent : corpus[d].sentences) {
      std::vector<std::string> norm(sent.size());
      std::vector<bool> punct(sent.size());
      for (std::size_t i = 0; i < sent.size(); ++i) {
        norm[i] = lowercase_normalize(sent.tokens[i].text);
        punct[i] = is_punctuation_token(sent.tokens[i].text);
      }
      for (std::size_t n = n_min; n <= n_max; ++n) {
        if (sent.size() < n) continue;
        for (std::size_t i = 0; i + n <= sent.size(); ++i) {
          bool has_punct = false;
          for (std::size_t k = i; k < i + n; ++k)
            if (punct[k]) { has_punct = true; break; }
          if (has_punct) continue;
          std::string key;
          for (std::size_t k = i; k < i + n; ++k) {
            if (k > i) key += ' ';
            key += norm[k];
          }
          Counts& c = counts[key];
          ++c.tf;
          if (c.last_doc != d) {
            c.last_doc = d;
            ++c.df;
          }
          if (c.tf == 1)
            tokens_of.emplace(key, std::vector<std::string>(norm.begin() + i, norm.begin() + i + n));
        }
      }
    }
  }

  const double n_docs = static_cast<double>(corpus.size());
  std::vector<NgramCandidate> out;
  out.reserve(counts.size());
  for (auto& [key, c] : counts) {
    NgramCandidate cand;
    cand.tokens = std::move(tokens_of[key]);
    cand.tf = c.tf;
    cand.df = c.df;
    cand.tfidf = static_cast<double>(c.tf) * std::log(n_docs / static_cast<double>(c.df));
    out.push_back(std::move(cand));
  }
  std::sort(out.begin(), out.end(), [](const NgramCandidate& a, const NgramCandidate& b) {
    if (a.tfidf != b.tfidf) return a.tfidf > b.tfidf;
    return a.tokens < b.tokens;
  });
  return out;
}

// One term per line, tokens space-separated; normalized and deduplicated.
inline TermDictionary import_terms(std::istream& in, TermSource source = TermSource::Imported,
                                   TermNormalizer normalize = &fold_term) {
  TermDictionary dict;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = strip(line);
    if (stripped.empty()) {
      std::cerr << "warning: term list line " << lineno << " is empty, skipped\n";
      continue;
    }
    std::vector<std::string> tokens;
    std::istringstream ss(stripped);
    std::string tok;
    while (ss >> tok) tokens.push_back(normalize(tok));
    dict.insert(tokens, source);
  }
  return dict;
}

inline void write_terms(std::ostream& out, const TermDictionary& dict) {
  for (const auto& [key, src] : dict.sorted_entries()) out << key << '\n';
}

// Greedy left-to-right longest match over normalized token forms. Linear
// time; misses terms broken by intervening tokens, which is the intended
// behavior of the dictionary method.
inline std::vector<TermSpan> annotate_with_dictionary(const Sentence& sentence,
                                                      const TermDictionary& dict,
                                                      std::size_t sent_index = 0,
                                                      TermNormalizer normalize = &fold_term) {
  std::vector<TermSpan> spans;
  const std::size_t n = sentence.size();
  if (n == 0 || dict.empty()) return spans;
  std::vector<std::string> norm(n);
  for (std::size_t i = 0; i < n; ++i) norm[i] = normalize(sentence.tokens[i].text);

  std::size_t i = 0;
  while (i < n) {
    const std::size_t max_len = std::min(dict.max_token_len(), n - i);
    std::size_t matched = 0;
    std::string key;
    for (std::size_t len = max_len; len >= 1; --len) {
      key.clear();
      for (std::size_t k = i; k < i + len; ++k) {
        if (k > i) key += ' ';
        key += norm[k];
      }
      if (dict.contains(key)) { matched = len; break; }
    }
    if (matched) {
      spans.push_back({sent_index, i, i + matched});
      i += matched;
    } else {
      ++i;
    }
  }
  return spans;
}

struct AutoAnnotateReport {
  std::size_t n_tokens = 0;
  std::size_t n_terms = 0;
};

// Dictionary-annotates every sentence and serializes the result as BIO.
inline AutoAnnotateReport auto_annotate(const Corpus& corpus, const TermDictionary& dict,
                                        std::ostream& out) {
  AutoAnnotateReport rep;
  for (const Document& doc : corpus) {
    out << kDocHeaderPrefix << doc.doc_id << '\n';
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      const Sentence& sent = doc.sentences[s];
      const std::vector<TermSpan> spans = annotate_with_dictionary(sent, dict, s);
      const std::vector<BioTag> tags = tags_from_spans(spans, sent.size());
      rep.n_tokens += sent.size();
      rep.n_terms += spans.size();
      for (std::size_t i = 0; i < sent.size(); ++i)
        out << sent.tokens[i].text << '\t' << to_string(tags[i]) << '\n';
      out << '\n';
    }
  }
  return rep;
}

// In-memory variant: returns a copy of the corpus with predicted tags.
inline Corpus annotate_corpus(const Corpus& corpus, const TermDictionary& dict) {
  Corpus out = corpus;
  for (Document& doc : out) {
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      Sentence& sent = doc.sentences[s];
      sent.tags = tags_from_spans(annotate_with_dictionary(sent, dict, s), sent.size());
    }
  }
  return out;
}

}  // namespace termex

#endif  // TERMEX_DICTIONARY_HPP
