#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "termex/dictionary.hpp"

using namespace termex;

namespace {

Document doc_of(std::string id, const std::vector<std::vector<std::string>>& sentences) {
  Document d;
  d.doc_id = std::move(id);
  for (const auto& words : sentences) d.sentences.push_back(synthetic::sentence_from_words(words));
  return d;
}

TermDictionary dict_of(const std::vector<std::vector<std::string>>& terms) {
  TermDictionary d;
  for (const auto& t : terms) d.insert(t, TermSource::Imported);
  return d;
}

}  // namespace

TEST_CASE("mine_candidates computes tf, df and tfidf") {
  // bigram "анализ текстов" occurs twice, in doc 1 only
  const Corpus corpus = {
      doc_of("d1", {{"анализ", "текстов", "дал", "анализ", "текстов"}}),
      doc_of("d2", {{"другой", "подход", "дал", "результат"}}),
  };
  const auto cands = mine_candidates(corpus);
  REQUIRE_FALSE(cands.empty());

  const NgramCandidate* target = nullptr;
  for (const auto& c : cands)
    if (c.joined() == "анализ текстов") target = &c;
  REQUIRE(target != nullptr);
  CHECK(target->tf == 2);
  CHECK(target->df == 1);
  CHECK_THAT(target->tfidf, Catch::Matchers::WithinAbs(2.0 * std::log(2.0), 1e-12));
  CHECK_THAT(target->tfidf, Catch::Matchers::WithinAbs(1.3862943611198906, 1e-12));
  // ranked first: every other n-gram has tf 1
  CHECK(cands.front().joined() == "анализ текстов");
}

TEST_CASE("n-gram present in every document scores zero") {
  const Corpus corpus = {
      doc_of("d1", {{"база", "данных", "растет"}}),
      doc_of("d2", {{"наша", "база", "данных"}}),
  };
  const auto cands = mine_candidates(corpus);
  const NgramCandidate* target = nullptr;
  for (const auto& c : cands)
    if (c.joined() == "база данных") target = &c;
  REQUIRE(target != nullptr);
  CHECK(target->df == 2);
  CHECK(target->tfidf == 0.0);
}

TEST_CASE("candidates with punctuation tokens are excluded") {
  const Corpus corpus = {doc_of("d1", {{"метод", ";", "данные", "метода"}})};
  for (const auto& c : mine_candidates(corpus)) {
    CHECK(c.joined().find(';') == std::string::npos);
    CHECK(c.tokens.size() >= 2);
    CHECK(c.tokens.size() <= 4);
  }
}

TEST_CASE("mine_candidates rejects an empty corpus") {
  CHECK_THROWS_AS(mine_candidates({}), ValidityError);
}

TEST_CASE("mine_candidates tfidf grows with tf at fixed df") {
  std::mt19937 rng(5);
  Corpus corpus;
  for (int d = 0; d < 4; ++d) {
    auto words = synthetic::random_vocabulary(rng, 12);
    corpus.push_back(doc_of("d" + std::to_string(d), {words}));
  }
  const auto cands = mine_candidates(corpus);
  for (const auto& a : cands)
    for (const auto& b : cands)
      if (a.df == b.df && a.tf > b.tf && a.df < corpus.size()) CHECK(a.tfidf > b.tfidf);
}

TEST_CASE("import_terms normalizes and deduplicates") {
  std::istringstream in("база данных\nБаза Данных\n\nPython\n");
  const TermDictionary d = import_terms(in);
  CHECK(d.size() == 2);
  CHECK(d.contains("база данных"));
  CHECK(d.contains("python"));
  CHECK(d.max_token_len() == 2);
}

TEST_CASE("annotate_with_dictionary greedy longest match") {
  SECTION("bigram beats later unigram, inflected form stays unmatched") {
    const auto dict = dict_of({{"база", "данных"}, {"данные"}});
    const Sentence s = synthetic::sentence_from_words({"база", "данных", "хранит", "данные"});
    CHECK(annotate_with_dictionary(s, dict) == std::vector<TermSpan>{{0, 0, 2}, {0, 3, 4}});
  }
  SECTION("longest wins at the same start") {
    const auto dict = dict_of({{"метод"}, {"метод", "опорных", "векторов"}});
    const Sentence s = synthetic::sentence_from_words({"метод", "опорных", "векторов"});
    CHECK(annotate_with_dictionary(s, dict) == std::vector<TermSpan>{{0, 0, 3}});
  }
  SECTION("empty sentence") {
    CHECK(annotate_with_dictionary(Sentence{}, dict_of({{"метод"}})).empty());
  }
  SECTION("matching is case folded") {
    const auto dict = dict_of({{"python"}});
    const Sentence s = synthetic::sentence_from_words({"Python"});
    CHECK(annotate_with_dictionary(s, dict) == std::vector<TermSpan>{{0, 0, 1}});
  }
}

TEST_CASE("dictionary matches are disjoint dictionary entries") {
  std::mt19937 rng(17);
  for (int iter = 0; iter < 200; ++iter) {
    const auto vocab = synthetic::random_vocabulary(rng, 6);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::uniform_int_distribution<std::size_t> len(1, 3);

    TermDictionary dict;
    for (int e = 0; e < 4; ++e) {
      std::vector<std::string> entry;
      const std::size_t n = len(rng);
      for (std::size_t i = 0; i < n; ++i) entry.push_back(vocab[pick(rng)]);
      dict.insert(entry, TermSource::Imported);
    }
    std::vector<std::string> words;
    for (int i = 0; i < 10; ++i) words.push_back(vocab[pick(rng)]);
    const Sentence s = synthetic::sentence_from_words(words);

    const auto spans = annotate_with_dictionary(s, dict);
    for (std::size_t i = 0; i < spans.size(); ++i) {
      std::string key;
      for (std::size_t k = spans[i].start; k < spans[i].end; ++k) {
        if (k > spans[i].start) key += ' ';
        key += words[k];
      }
      CHECK(dict.contains(key));
      if (i) CHECK(spans[i - 1].end <= spans[i].start);
    }

    // agrees with the enumerate-all-maximal-matchings reference
    const auto ref = oracles::reference_greedy_match(words, dict);
    CHECK(spans == ref);
  }
}

TEST_CASE("adding a non-overlapping entry never loses matched tokens") {
  std::mt19937 rng(29);
  int accepted = 0;
  for (int iter = 0; iter < 400 && accepted < 80; ++iter) {
    const auto vocab = synthetic::random_vocabulary(rng, 6);
    std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
    std::uniform_int_distribution<std::size_t> len(1, 2);

    TermDictionary dict;
    for (int e = 0; e < 3; ++e) {
      std::vector<std::string> entry;
      const std::size_t n = len(rng);
      for (std::size_t i = 0; i < n; ++i) entry.push_back(vocab[pick(rng)]);
      dict.insert(entry, TermSource::Imported);
    }
    std::vector<std::string> words;
    for (int i = 0; i < 8; ++i) words.push_back(vocab[pick(rng)]);
    const Sentence s = synthetic::sentence_from_words(words);
    const auto before = annotate_with_dictionary(s, dict);

    // candidate new entry taken from the sentence itself
    std::uniform_int_distribution<std::size_t> start(0, words.size() - 2);
    const std::size_t b = start(rng);
    const std::size_t e = b + 1 + len(rng) % 2;
    const std::vector<std::string> entry(words.begin() + b, words.begin() + e);
    std::string key;
    for (std::size_t i = 0; i < entry.size(); ++i) {
      if (i) key += ' ';
      key += entry[i];
    }
    if (dict.contains(key)) continue;

    TermDictionary bigger = dict;
    bigger.insert(entry, TermSource::Imported);

    // precondition: none of the new entry's occurrences overlaps an old match
    bool overlaps_existing = false;
    for (std::size_t i = 0; i + entry.size() <= words.size(); ++i) {
      bool occurs = true;
      for (std::size_t k = 0; k < entry.size(); ++k) occurs &= (words[i + k] == entry[k]);
      if (!occurs) continue;
      const TermSpan occ{0, i, i + entry.size()};
      for (const TermSpan& m : before) overlaps_existing |= m.overlaps(occ);
    }
    if (overlaps_existing) continue;
    ++accepted;

    const auto after = annotate_with_dictionary(s, bigger);
    std::size_t tokens_before = 0, tokens_after = 0;
    for (const auto& sp : before) tokens_before += sp.length();
    for (const auto& sp : after) tokens_after += sp.length();
    CHECK(tokens_after >= tokens_before);
  }
  CHECK(accepted > 0);
}

TEST_CASE("auto_annotate writes BIO that round-trips") {
  const auto dict = dict_of({{"анализ", "текстов"}});
  const Corpus corpus = {doc_of("d1", {{"метод", "анализ", "текстов"}, {"другое"}})};

  std::ostringstream out;
  const AutoAnnotateReport rep = auto_annotate(corpus, dict, out);
  CHECK(rep.n_tokens == 4);
  CHECK(rep.n_terms == 1);

  std::istringstream in(out.str());
  const Corpus parsed = parse_bio(in);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0].sentences[0].spans(0) == std::vector<TermSpan>{{0, 1, 3}});

  std::ostringstream out2;
  write_bio(out2, parsed);
  CHECK(out2.str() == out.str());
}

TEST_CASE("auto_annotate with no matches is all O") {
  const auto dict = dict_of({{"несуществующее"}});
  const Corpus corpus = {doc_of("d1", {{"метод", "анализа"}})};
  std::ostringstream out;
  const auto rep = auto_annotate(corpus, dict, out);
  CHECK(rep.n_terms == 0);
  CHECK(out.str().find("B-TERM") == std::string::npos);
  CHECK(out.str().find("I-TERM") == std::string::npos);
}

TEST_CASE("write_terms emits sorted unique entries") {
  std::istringstream in("метод\nбаза данных\nметод\n");
  const TermDictionary d = import_terms(in);
  std::ostringstream out;
  write_terms(out, d);
  CHECK(out.str() == "база данных\nметод\n");
}
