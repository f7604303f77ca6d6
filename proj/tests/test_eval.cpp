#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "termex/eval.hpp"

using namespace termex;

namespace {

// One-document corpus over one sentence of `len` dummy tokens with the
// given spans as tags.
Corpus spans_corpus(const std::vector<TermSpan>& spans, std::size_t len,
                    const std::string& id = "d") {
  std::vector<std::string> words(len, "ток");
  Sentence s = synthetic::sentence_from_words(words);
  s.tags = tags_from_spans(spans, len);
  Document d;
  d.doc_id = id;
  d.sentences.push_back(std::move(s));
  return {d};
}

RelationInstance rel(const std::string& doc, std::size_t a1, std::size_t a2, RelationLabel l) {
  return {doc, 0, {0, a1, a1 + 1}, {0, a2, a2 + 1}, l};
}

}  // namespace

TEST_CASE("exact evaluation on identical corpora is perfect") {
  const Corpus gold = spans_corpus({{0, 0, 2}, {0, 3, 4}}, 5);
  const EvalReport r = eval_spans_exact(gold, gold);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f_score == 1.0);
  CHECK(eval_spans_fuzzy(gold, gold).f_score == 1.0);
}

TEST_CASE("exact evaluation hand count") {
  const Corpus gold = spans_corpus({{0, 0, 2}, {0, 3, 4}}, 5);
  const Corpus pred = spans_corpus({{0, 0, 2}, {0, 2, 4}}, 5);
  const EvalReport r = eval_spans_exact(gold, pred);
  CHECK(r.tp == 1);
  CHECK(r.fp == 1);
  CHECK(r.fn == 1);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == 0.5);
  CHECK(r.f_score == 0.5);
}

TEST_CASE("empty predictions give zero scores") {
  const Corpus gold = spans_corpus({{0, 0, 2}}, 3);
  const Corpus pred = spans_corpus({}, 3);
  const EvalReport r = eval_spans_exact(gold, pred);
  CHECK(r.precision == 0.0);
  CHECK(r.recall == 0.0);
  CHECK(r.f_score == 0.0);
}

TEST_CASE("fuzzy evaluation matches on one-token overlap") {
  const Corpus gold = spans_corpus({{0, 0, 2}, {0, 3, 4}}, 5);
  const Corpus pred = spans_corpus({{0, 0, 2}, {0, 2, 4}}, 5);
  const EvalReport r = eval_spans_fuzzy(gold, pred);
  CHECK(r.tp == 2);
  CHECK(r.precision == 1.0);
  CHECK(r.recall == 1.0);
  CHECK(r.f_score == 1.0);
}

TEST_CASE("fuzzy evaluation with disjoint spans") {
  const Corpus gold = spans_corpus({{0, 0, 1}}, 4);
  const Corpus pred = spans_corpus({{0, 2, 3}}, 4);
  CHECK(eval_spans_fuzzy(gold, pred).tp == 0);
}

TEST_CASE("one prediction can match only one gold span") {
  const Corpus gold = spans_corpus({{0, 0, 2}, {0, 3, 5}}, 6);
  const Corpus pred = spans_corpus({{0, 1, 4}}, 6);
  const EvalReport r = eval_spans_fuzzy(gold, pred);
  CHECK(r.tp == 1);
  CHECK(r.fn == 1);
  CHECK(r.fp == 0);
}

TEST_CASE("mismatched corpora are rejected") {
  const Corpus gold = spans_corpus({{0, 0, 1}}, 3, "a");
  const Corpus other_doc = spans_corpus({{0, 0, 1}}, 3, "b");
  const Corpus other_len = spans_corpus({{0, 0, 1}}, 4, "a");
  CHECK_THROWS_AS(eval_spans_exact(gold, other_doc), ValidityError);
  CHECK_THROWS_AS(eval_spans_exact(gold, other_len), ValidityError);
  CHECK_THROWS_AS(eval_spans_fuzzy(gold, other_len), ValidityError);
}

TEST_CASE("exact tp never exceeds fuzzy tp; greedy never beats optimal") {
  std::mt19937 rng(53);
  std::uniform_int_distribution<std::size_t> len(4, 14);
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t n = len(rng);
    const auto gold_tags = synthetic::random_valid_tags(rng, n);
    const auto pred_tags = synthetic::random_valid_tags(rng, n);
    const auto gold_spans = spans_from_tags(gold_tags);
    const auto pred_spans = spans_from_tags(pred_tags);

    const Corpus gold = spans_corpus(gold_spans, n);
    const Corpus pred = spans_corpus(pred_spans, n);
    const EvalReport exact = eval_spans_exact(gold, pred);
    const EvalReport fuzzy = eval_spans_fuzzy(gold, pred);

    CHECK(exact.tp <= fuzzy.tp);
    const std::size_t optimal = oracles::max_bipartite_overlap(gold_spans, pred_spans);
    CHECK(fuzzy.tp <= optimal);
  }
}

TEST_CASE("relation evaluation all correct") {
  const std::vector<RelationInstance> gold = {rel("a", 0, 2, RelationLabel::Usage),
                                              rel("a", 3, 5, RelationLabel::IsA)};
  const RelationReport r = eval_relations(gold, gold);
  CHECK(r.micro_f == 1.0);
  CHECK(r.macro_f == 1.0);
  CHECK(r.per_label.at(RelationLabel::Usage).f == 1.0);
  CHECK(r.per_label.at(RelationLabel::IsA).f == 1.0);
}

TEST_CASE("relation evaluation hand count for USAGE") {
  // 3 USAGE gold; 2 predicted correctly, 1 predicted ISA
  const std::vector<RelationInstance> gold = {rel("a", 0, 2, RelationLabel::Usage),
                                              rel("a", 3, 5, RelationLabel::Usage),
                                              rel("b", 0, 2, RelationLabel::Usage)};
  std::vector<RelationInstance> pred = gold;
  pred[2].label = RelationLabel::IsA;

  const RelationReport r = eval_relations(gold, pred);
  const LabelMetrics& usage = r.per_label.at(RelationLabel::Usage);
  CHECK(usage.precision == 1.0);
  CHECK_THAT(usage.recall, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  CHECK_THAT(usage.f, Catch::Matchers::WithinAbs(0.8, 1e-12));
  // micro F equals accuracy in the fixed-pair setting
  CHECK_THAT(r.micro_f, Catch::Matchers::WithinAbs(2.0 / 3.0, 1e-12));
  // ISA is absent from gold: not in the macro mean
  CHECK_THAT(r.macro_f, Catch::Matchers::WithinAbs(0.8, 1e-12));
}

TEST_CASE("relation evaluation rejects mismatched pairs") {
  const std::vector<RelationInstance> gold = {rel("a", 0, 2, RelationLabel::Usage)};
  const std::vector<RelationInstance> pred = {rel("a", 0, 3, RelationLabel::Usage)};
  CHECK_THROWS_AS(eval_relations(gold, pred), ValidityError);
  CHECK_THROWS_AS(eval_relations(gold, {}), ValidityError);
}

TEST_CASE("micro F equals accuracy on random labelings") {
  std::mt19937 rng(59);
  std::uniform_int_distribution<std::size_t> l(0, 5);
  for (int iter = 0; iter < 50; ++iter) {
    std::vector<RelationInstance> gold, pred;
    std::size_t correct = 0;
    const std::size_t n = 20;
    for (std::size_t i = 0; i < n; ++i) {
      const RelationInstance g = rel("doc" + std::to_string(i), 0, 2, kRelationLabels[l(rng)]);
      RelationInstance p = g;
      p.label = kRelationLabels[l(rng)];
      correct += (p.label == g.label);
      gold.push_back(g);
      pred.push_back(p);
    }
    const RelationReport r = eval_relations(gold, pred);
    CHECK_THAT(r.micro_f,
               Catch::Matchers::WithinAbs(static_cast<double>(correct) / n, 1e-12));
  }
}

TEST_CASE("fuzzy matching stays within sentences and documents") {
  // same span coordinates in a different sentence or document never match
  std::vector<std::string> words(4, "ток");
  auto make = [&](const std::string& id, std::size_t sent_of_span) {
    Document d;
    d.doc_id = id;
    for (std::size_t s = 0; s < 2; ++s) {
      Sentence sent = synthetic::sentence_from_words(words);
      sent.tags = tags_from_spans(
          s == sent_of_span ? std::vector<TermSpan>{{s, 1, 3}} : std::vector<TermSpan>{}, 4);
      d.sentences.push_back(std::move(sent));
    }
    return d;
  };
  const Corpus gold = {make("a", 0), make("b", 1)};
  const Corpus pred = {make("a", 1), make("b", 1)};  // doc a: wrong sentence
  const EvalReport fuzzy = eval_spans_fuzzy(gold, pred);
  CHECK(fuzzy.tp == 1);  // only doc b matches
  CHECK(fuzzy.fp == 1);
  CHECK(fuzzy.fn == 1);
}
