#ifndef TERMEX_EVAL_HPP
#define TERMEX_EVAL_HPP

// Scoring of entity predictions (exact and fuzzy span matching) and of
// relation predictions (per-label and aggregate F-scores).
//
// Exact = span identity. Fuzzy = one-to-one matching where a predicted span
// may match a gold span of the same sentence sharing at least one token
// index; the matching is built greedily in document order.

#include <algorithm>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "termex/corpus.hpp"

namespace termex {

struct EvalReport {
  enum class Mode { Exact, Fuzzy };

  Mode mode = Mode::Exact;
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f_score = 0.0;

  static EvalReport from_counts(Mode mode, std::size_t tp, std::size_t fp, std::size_t fn) {
    EvalReport r;
    r.mode = mode;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f_score = (r.precision + r.recall > 0.0)
                    ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
                    : 0.0;
    return r;
  }
};

namespace detail {

// Both corpora must describe the same documents, sentence for sentence.
inline void check_aligned(const Corpus& gold, const Corpus& pred) {
  if (gold.size() != pred.size())
    throw ValidityError("gold and prediction corpora have different document counts");
  std::map<std::string_view, const Document*> pred_by_id;
  for (const Document& d : pred) pred_by_id[d.doc_id] = &d;
  for (const Document& g : gold) {
    auto it = pred_by_id.find(g.doc_id);
    if (it == pred_by_id.end())
      throw ValidityError("document '" + g.doc_id + "' missing from predictions");
    const Document& p = *it->second;
    if (g.sentences.size() != p.sentences.size())
      throw ValidityError("document '" + g.doc_id + "' has mismatched sentence count");
    for (std::size_t s = 0; s < g.sentences.size(); ++s)
      if (g.sentences[s].size() != p.sentences[s].size())
        throw ValidityError("document '" + g.doc_id + "' sentence " + std::to_string(s) +
                            " has mismatched token count");
  }
}

}  // namespace detail

inline EvalReport eval_spans_exact(const Corpus& gold, const Corpus& pred) {
  detail::check_aligned(gold, pred);
  const std::set<DocSpan> g = doc_span_set(gold);
  const std::set<DocSpan> p = doc_span_set(pred);
  std::size_t tp = 0;
  for (const DocSpan& s : p) tp += g.count(s);
  return EvalReport::from_counts(EvalReport::Mode::Exact, tp, p.size() - tp, g.size() - tp);
}

inline EvalReport eval_spans_fuzzy(const Corpus& gold, const Corpus& pred) {
  detail::check_aligned(gold, pred);
  std::map<std::string_view, const Document*> pred_by_id;
  for (const Document& d : pred) pred_by_id[d.doc_id] = &d;

  std::size_t tp = 0, n_gold = 0, n_pred = 0;
  for (const Document& g : gold) {
    const Document& p = *pred_by_id.at(g.doc_id);
    for (std::size_t s = 0; s < g.sentences.size(); ++s) {
      std::vector<TermSpan> gs = g.sentences[s].spans(s);
      std::vector<TermSpan> ps = p.sentences[s].spans(s);
      std::sort(gs.begin(), gs.end());
      std::sort(ps.begin(), ps.end());
      n_gold += gs.size();
      n_pred += ps.size();
      std::vector<bool> used(gs.size(), false);
      for (const TermSpan& pspan : ps) {
        for (std::size_t k = 0; k < gs.size(); ++k) {
          if (used[k] || !gs[k].overlaps(pspan)) continue;
          used[k] = true;
          ++tp;
          break;
        }
      }
    }
  }
  return EvalReport::from_counts(EvalReport::Mode::Fuzzy, tp, n_pred - tp, n_gold - tp);
}

struct LabelMetrics {
  std::size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f = 0.0;
};

struct RelationReport {
  std::map<RelationLabel, LabelMetrics> per_label;  // labels present in gold or pred
  double micro_f = 0.0;  // equals accuracy in the fixed-pair setting
  double macro_f = 0.0;  // unweighted mean F over labels present in gold
  std::size_t n_pairs = 0;
};

// Classification setting: predictions must cover exactly the gold pairs.
inline RelationReport eval_relations(const std::vector<RelationInstance>& gold,
                                     const std::vector<RelationInstance>& pred) {
  using PairKey = std::tuple<std::string, std::size_t, TermSpan, TermSpan>;
  auto key_of = [](const RelationInstance& r) {
    return PairKey{r.doc_id, r.sent_index, r.arg1, r.arg2};
  };

  std::vector<std::pair<PairKey, RelationLabel>> g, p;
  for (const RelationInstance& r : gold) g.emplace_back(key_of(r), r.label);
  for (const RelationInstance& r : pred) p.emplace_back(key_of(r), r.label);
  std::sort(g.begin(), g.end());
  std::sort(p.begin(), p.end());
  if (g.size() != p.size())
    throw ValidityError("relation evaluation needs one prediction per gold pair");
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i].first != p[i].first)
      throw ValidityError("predicted relation pair not present in gold (doc '" +
                          std::get<0>(p[i].first) + "')");

  RelationReport rep;
  rep.n_pairs = g.size();
  std::set<RelationLabel> in_gold;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const RelationLabel want = g[i].second, got = p[i].second;
    in_gold.insert(want);
    if (want == got) {
      ++rep.per_label[want].tp;
    } else {
      ++rep.per_label[got].fp;
      ++rep.per_label[want].fn;
    }
  }

  std::size_t tp_total = 0;
  double macro_sum = 0.0;
  for (auto& [label, m] : rep.per_label) {
    m.precision = (m.tp + m.fp) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
    m.recall = (m.tp + m.fn) ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
    m.f = (m.precision + m.recall > 0.0) ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                         : 0.0;
    tp_total += m.tp;
    if (in_gold.count(label)) macro_sum += m.f;
  }
  for (RelationLabel l : kRelationLabels)
    if (!in_gold.count(l) && !rep.per_label.count(l))
      std::cerr << "note: label " << to_string(l) << " absent from gold and predictions, "
                << "excluded from macro mean\n";
  rep.micro_f = rep.n_pairs ? static_cast<double>(tp_total) / static_cast<double>(rep.n_pairs) : 0.0;
  rep.macro_f = in_gold.empty() ? 0.0 : macro_sum / static_cast<double>(in_gold.size());
  return rep;
}

}  // namespace termex

#endif  // TERMEX_EVAL_HPP
