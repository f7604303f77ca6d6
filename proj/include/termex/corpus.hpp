#ifndef TERMEX_CORPUS_HPP
#define TERMEX_CORPUS_HPP

// Corpus data model: tokens, sentences, documents, BIO tags, term spans and
// relation instances, plus the file formats used to exchange them.
//
// BIO corpus file: UTF-8, lines "<token>\t<tag>", blank line between
// sentences, "# doc_id = <id>" before each document, tags O | B-TERM | I-TERM.
// Relations file: UTF-8 JSON lines,
//   {"doc_id": str, "sent": int, "arg1": [s,e], "arg2": [s,e], "label": str}.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "termex/text.hpp"

namespace termex {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + msg : msg),
        line_number(line) {}
  std::size_t line_number;
};

class ValidityError : public std::runtime_error {
 public:
  explicit ValidityError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// Tags and spans

enum class BioTag : std::uint8_t { O = 0, B = 1, I = 2 };

inline constexpr int kNumBioTags = 3;

inline std::string_view to_string(BioTag t) {
  switch (t) {
    case BioTag::O: return "O";
    case BioTag::B: return "B-TERM";
    case BioTag::I: return "I-TERM";
  }
  return "O";
}

inline BioTag bio_tag_from_string(std::string_view s, std::size_t line = 0) {
  if (s == "O") return BioTag::O;
  if (s == "B-TERM") return BioTag::B;
  if (s == "I-TERM") return BioTag::I;
  throw ParseError("invalid BIO tag '" + std::string(s) + "' (expected O, B-TERM or I-TERM)", line);
}

// I-TERM must not open a sentence or follow O.
inline bool valid_tag_sequence(const std::vector<BioTag>& tags) {
  BioTag prev = BioTag::O;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == BioTag::I && (i == 0 || prev == BioTag::O)) return false;
    prev = tags[i];
  }
  return true;
}

// Orphan I-TERM becomes B-TERM. Needed when ingesting third-party predictions.
inline std::vector<BioTag> repair_tags(std::vector<BioTag> tags) {
  BioTag prev = BioTag::O;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == BioTag::I && (i == 0 || prev == BioTag::O)) tags[i] = BioTag::B;
    prev = tags[i];
  }
  return tags;
}

// Half-open token-index interval [start, end) within one sentence.
struct TermSpan {
  std::size_t sent_index = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const TermSpan&) const = default;
  std::size_t length() const { return end - start; }
  bool overlaps(const TermSpan& o) const {
    return sent_index == o.sent_index && start < o.end && o.start < end;
  }
};

inline std::vector<TermSpan> spans_from_tags(const std::vector<BioTag>& tags,
                                             std::size_t sent_index = 0) {
  if (!valid_tag_sequence(tags))
    throw ValidityError("invalid BIO sequence: I-TERM at sentence start or after O");
  std::vector<TermSpan> spans;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == BioTag::B) {
      std::size_t j = i + 1;
      while (j < tags.size() && tags[j] == BioTag::I) ++j;
      spans.push_back({sent_index, i, j});
      i = j - 1;
    }
  }
  return spans;
}

inline std::vector<BioTag> tags_from_spans(const std::vector<TermSpan>& spans,
                                           std::size_t sentence_len) {
  std::vector<BioTag> tags(sentence_len, BioTag::O);
  std::vector<TermSpan> sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const TermSpan& s = sorted[k];
    if (s.start >= s.end || s.end > sentence_len)
      throw ValidityError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                          ") out of bounds for sentence of length " + std::to_string(sentence_len));
    if (k > 0 && sorted[k - 1].overlaps(s))
      throw ValidityError("overlapping spans at token " + std::to_string(s.start));
    tags[s.start] = BioTag::B;
    for (std::size_t i = s.start + 1; i < s.end; ++i) tags[i] = BioTag::I;
  }
  return tags;
}

// ---------------------------------------------------------------------------
// Documents

struct Token {
  std::string text;
  std::size_t char_start = 0;  // byte offset into the document text, inclusive
  std::size_t char_end = 0;    // byte offset, exclusive
};

struct Sentence {
  std::vector<Token> tokens;
  std::vector<BioTag> tags;  // empty when unlabeled, else one per token

  bool labeled() const { return !tags.empty(); }
  std::size_t size() const { return tokens.size(); }
  std::vector<TermSpan> spans(std::size_t sent_index = 0) const {
    return labeled() ? spans_from_tags(tags, sent_index) : std::vector<TermSpan>{};
  }
};

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;

  std::vector<TermSpan> spans() const {
    std::vector<TermSpan> all;
    for (std::size_t s = 0; s < sentences.size(); ++s)
      for (const TermSpan& sp : sentences[s].spans(s)) all.push_back(sp);
    return all;
  }
};

using Corpus = std::vector<Document>;

// A span with its document identity, for set comparisons across corpora.
struct DocSpan {
  std::string doc_id;
  TermSpan span;
  auto operator<=>(const DocSpan&) const = default;
};

inline std::set<DocSpan> doc_span_set(const Corpus& corpus) {
  std::set<DocSpan> out;
  for (const Document& d : corpus)
    for (const TermSpan& sp : d.spans()) out.insert({d.doc_id, sp});
  return out;
}

// ---------------------------------------------------------------------------
// Relations

enum class RelationLabel : std::uint8_t { Cause = 0, Compare, IsA, PartOf, Synonyms, Usage };

inline constexpr std::array<RelationLabel, 6> kRelationLabels = {
    RelationLabel::Cause,   RelationLabel::Compare,  RelationLabel::IsA,
    RelationLabel::PartOf,  RelationLabel::Synonyms, RelationLabel::Usage};

inline constexpr std::array<std::string_view, 6> kRelationLabelNames = {
    "CAUSE", "COMPARE", "ISA", "PARTOF", "SYNONYMS", "USAGE"};

inline std::string_view to_string(RelationLabel l) {
  return kRelationLabelNames[static_cast<std::size_t>(l)];
}

inline RelationLabel relation_label_from_string(std::string_view s, std::size_t line = 0) {
  for (std::size_t i = 0; i < kRelationLabelNames.size(); ++i)
    if (s == kRelationLabelNames[i]) return kRelationLabels[i];
  throw ParseError("unknown relation label '" + std::string(s) +
                       "' (legal: CAUSE, COMPARE, ISA, PARTOF, SYNONYMS, USAGE)",
                   line);
}

// Directed pair arg1 -> arg2 within one sentence; arg1 is the X of the
// relation gloss (X is used for Y, X is a Y, ...).
struct RelationInstance {
  std::string doc_id;
  std::size_t sent_index = 0;
  TermSpan arg1;
  TermSpan arg2;
  RelationLabel label = RelationLabel::Cause;

  auto operator<=>(const RelationInstance&) const = default;

  void check() const {
    if (arg1.sent_index != sent_index || arg2.sent_index != sent_index)
      throw ValidityError("relation arguments must lie in sentence " + std::to_string(sent_index));
    if (arg1.start >= arg1.end || arg2.start >= arg2.end)
      throw ValidityError("relation argument span is empty");
    if (arg1.overlaps(arg2))
      throw ValidityError("relation arguments overlap in doc '" + doc_id + "'");
  }
};

// ---------------------------------------------------------------------------
// BIO corpus I/O

struct BioParseOptions {
  bool repair = false;  // convert orphan I-TERM to B-TERM instead of failing
};

namespace detail {
inline void flush_sentence(Document& doc, Sentence& sent, const BioParseOptions& opt,
                           std::size_t first_line) {
  if (sent.tokens.empty()) return;
  if (!valid_tag_sequence(sent.tags)) {
    if (opt.repair) {
      sent.tags = repair_tags(sent.tags);
    } else {
      std::size_t pos = 0;
      BioTag prev = BioTag::O;
      for (std::size_t i = 0; i < sent.tags.size(); ++i) {
        if (sent.tags[i] == BioTag::I && (i == 0 || prev == BioTag::O)) { pos = i; break; }
        prev = sent.tags[i];
      }
      throw ValidityError("document '" + doc.doc_id + "' sentence " +
                          std::to_string(doc.sentences.size()) + " token " + std::to_string(pos) +
                          " (near line " + std::to_string(first_line) +
                          "): I-TERM at sentence start or after O");
    }
  }
  doc.sentences.push_back(std::move(sent));
  sent = Sentence{};
}
}  // namespace detail

inline constexpr std::string_view kDocHeaderPrefix = "# doc_id = ";

inline Corpus parse_bio(std::istream& in, const BioParseOptions& opt = {}) {
  Corpus corpus;
  std::unordered_set<std::string> seen_ids;
  Document* doc = nullptr;
  Sentence sent;
  std::string line;
  std::size_t lineno = 0, sent_first_line = 0;

  auto open_doc = [&](std::string id) {
    if (!seen_ids.insert(id).second)
      throw ParseError("duplicate doc_id '" + id + "'", lineno);
    corpus.push_back(Document{std::move(id), {}});
    doc = &corpus.back();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(kDocHeaderPrefix, 0) == 0) {
      if (doc) detail::flush_sentence(*doc, sent, opt, sent_first_line);
      open_doc(strip(line.substr(kDocHeaderPrefix.size())));
      continue;
    }
    if (strip(line).empty()) {
      if (doc) detail::flush_sentence(*doc, sent, opt, sent_first_line);
      continue;
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
        line.find('\t', tab + 1) != std::string::npos)
      throw ParseError("expected two tab-separated columns, got '" + line + "'", lineno);
    if (!doc) open_doc("doc0");  // headerless files form one implicit document
    if (sent.tokens.empty()) sent_first_line = lineno;
    std::string text = line.substr(0, tab);
    const BioTag tag = bio_tag_from_string(line.substr(tab + 1), lineno);
    // Synthetic byte offsets: single-space gaps within a document.
    std::size_t start = 0;
    if (!doc->sentences.empty() || !sent.tokens.empty()) {
      const Token& prev =
          sent.tokens.empty() ? doc->sentences.back().tokens.back() : sent.tokens.back();
      start = prev.char_end + 1;
    }
    sent.tokens.push_back({std::move(text), start, start + tab});
    sent.tags.push_back(tag);
  }
  if (doc) detail::flush_sentence(*doc, sent, opt, sent_first_line);
  return corpus;
}

inline void write_bio(std::ostream& out, const Corpus& corpus) {
  for (const Document& doc : corpus) {
    out << kDocHeaderPrefix << doc.doc_id << '\n';
    for (const Sentence& s : doc.sentences) {
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        const BioTag t = s.labeled() ? s.tags[i] : BioTag::O;
        out << s.tokens[i].text << '\t' << to_string(t) << '\n';
      }
      out << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Relations I/O

inline std::vector<RelationInstance> parse_relations(std::istream& in,
                                                     bool require_label = true) {
  std::vector<RelationInstance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad JSON: ") + e.what(), lineno);
    }
    try {
      RelationInstance r;
      r.doc_id = j.at("doc_id").get<std::string>();
      const long long sent = j.at("sent").get<long long>();
      if (sent < 0) throw ParseError("negative sentence index", lineno);
      r.sent_index = static_cast<std::size_t>(sent);
      auto span_of = [&](const char* key) {
        const auto& a = j.at(key);
        if (!a.is_array() || a.size() != 2)
          throw ParseError(std::string(key) + " must be [start, end]", lineno);
        const long long s = a[0].get<long long>(), e = a[1].get<long long>();
        if (s < 0 || e <= s) throw ParseError(std::string(key) + " is not a valid span", lineno);
        return TermSpan{r.sent_index, static_cast<std::size_t>(s), static_cast<std::size_t>(e)};
      };
      r.arg1 = span_of("arg1");
      r.arg2 = span_of("arg2");
      if (j.contains("label") || require_label)
        r.label = relation_label_from_string(j.at("label").get<std::string>(), lineno);
      r.check();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad relation object: ") + e.what(), lineno);
    } catch (const ValidityError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

inline void write_relations(std::ostream& out, const std::vector<RelationInstance>& rels) {
  for (const RelationInstance& r : rels) {
    nlohmann::ordered_json j;
    j["doc_id"] = r.doc_id;
    j["sent"] = r.sent_index;
    j["arg1"] = {r.arg1.start, r.arg1.end};
    j["arg2"] = {r.arg2.start, r.arg2.end};
    j["label"] = std::string(to_string(r.label));
    out << j.dump() << '\n';
  }
}

// Bounds checks that need the corpus the relation file refers to.
inline void validate_relations(const std::vector<RelationInstance>& rels, const Corpus& corpus) {
  std::map<std::string_view, const Document*> by_id;
  for (const Document& d : corpus) by_id[d.doc_id] = &d;
  for (const RelationInstance& r : rels) {
    auto it = by_id.find(r.doc_id);
    if (it == by_id.end())
      throw ValidityError("relation refers to unknown document '" + r.doc_id + "'");
    const Document& d = *it->second;
    if (r.sent_index >= d.sentences.size())
      throw ValidityError("relation sentence index " + std::to_string(r.sent_index) +
                          " out of range in document '" + r.doc_id + "'");
    const std::size_t len = d.sentences[r.sent_index].size();
    if (r.arg1.end > len || r.arg2.end > len)
      throw ValidityError("relation span outside sentence of length " + std::to_string(len) +
                          " in document '" + r.doc_id + "'");
  }
}

// ---------------------------------------------------------------------------
// Statistics and agreement

struct CorpusStats {
  std::size_t n_documents = 0;
  std::size_t n_tokens = 0;
  std::size_t n_terms = 0;
  double mean_term_len = 0.0;  // tokens; 0.0 for an empty corpus
  std::size_t max_term_len = 0;
  std::map<RelationLabel, std::size_t> relation_counts;

  std::size_t n_relations() const {
    std::size_t n = 0;
    for (const auto& [l, c] : relation_counts) n += c;
    return n;
  }
};

inline CorpusStats corpus_stats(const Corpus& corpus,
                                const std::vector<RelationInstance>& relations = {}) {
  CorpusStats st;
  st.n_documents = corpus.size();
  std::size_t term_tokens = 0;
  for (const Document& d : corpus) {
    for (std::size_t s = 0; s < d.sentences.size(); ++s) {
      st.n_tokens += d.sentences[s].size();
      for (const TermSpan& sp : d.sentences[s].spans(s)) {
        ++st.n_terms;
        term_tokens += sp.length();
        st.max_term_len = std::max(st.max_term_len, sp.length());
      }
    }
  }
  st.mean_term_len = st.n_terms ? static_cast<double>(term_tokens) / st.n_terms : 0.0;
  for (const RelationInstance& r : relations) ++st.relation_counts[r.label];
  return st;
}

// Jaccard |A∩B| / |A∪B| over annotation sets compared by full identity.
// Two empty sets count as total agreement on absence.
template <typename T>
double agreement(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) {
    std::cerr << "warning: agreement over two empty sets, defined as 1.0\n";
    return 1.0;
  }
  std::size_t inter = 0;
  for (const T& x : a) inter += b.count(x);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace termex

#endif  // TERMEX_CORPUS_HPP
