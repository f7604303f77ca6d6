#ifndef TERMEX_RELATION_HPP
#define TERMEX_RELATION_HPP

// Six-way relation classifier over (sentence, entity-pair) inputs: entity
// bitmasks, sparse indicator features, a softmax output layer and MSE (or
// cross-entropy) loss, trained by full-batch gradient descent.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "termex/corpus.hpp"
#include "termex/crf.hpp"
#include "termex/tokenize.hpp"

namespace termex {

inline constexpr std::size_t kNumRelationLabels = 6;

struct RelationExample {
  std::vector<std::string> tokens;  // normalized sentence tokens
  std::vector<std::uint8_t> mask1;  // 1 on arg1 tokens
  std::vector<std::uint8_t> mask2;  // 1 on arg2 tokens
  std::optional<RelationLabel> label;

  void check() const {
    if (mask1.size() != tokens.size() || mask2.size() != tokens.size())
      throw ValidityError("entity masks must match the token count");
    std::size_t n1 = 0, n2 = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (mask1[i] && mask2[i]) throw ValidityError("entity masks overlap at token " + std::to_string(i));
      n1 += mask1[i];
      n2 += mask2[i];
    }
    if (n1 == 0 || n2 == 0) throw ValidityError("each entity mask needs at least one token");
  }
};

inline RelationExample make_relation_example(const Sentence& sentence, const TermSpan& arg1,
                                             const TermSpan& arg2,
                                             std::optional<RelationLabel> label = std::nullopt) {
  const std::size_t n = sentence.size();
  if (arg1.end > n || arg2.end > n) throw ValidityError("relation argument outside sentence");
  RelationExample ex;
  ex.tokens.reserve(n);
  for (const Token& t : sentence.tokens) ex.tokens.push_back(lowercase_normalize(t.text));
  ex.mask1.assign(n, 0);
  ex.mask2.assign(n, 0);
  for (std::size_t i = arg1.start; i < arg1.end; ++i) ex.mask1[i] = 1;
  for (std::size_t i = arg2.start; i < arg2.end; ++i) ex.mask2[i] = 1;
  ex.label = label;
  ex.check();
  return ex;
}

// Builds labeled examples from a BIO corpus plus its relations file.
inline std::vector<RelationExample> relation_examples(const Corpus& corpus,
                                                      const std::vector<RelationInstance>& rels) {
  validate_relations(rels, corpus);
  std::map<std::string_view, const Document*> by_id;
  for (const Document& d : corpus) by_id[d.doc_id] = &d;
  std::vector<RelationExample> out;
  out.reserve(rels.size());
  for (const RelationInstance& r : rels)
    out.push_back(make_relation_example(by_id.at(r.doc_id)->sentences[r.sent_index], r.arg1,
                                        r.arg2, r.label));
  return out;
}

// Zone-tagged bags of words (arg1 / arg2 / between), entity order flag,
// token-distance bucket and entity boundary words. Sorted and deduplicated.
inline std::vector<std::string> featurize_pair(const RelationExample& ex) {
  ex.check();
  std::vector<std::string> feats;
  const std::size_t n = ex.tokens.size();

  std::size_t a1_first = n, a1_last = 0, a2_first = n, a2_last = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ex.mask1[i]) {
      feats.push_back("a1:w=" + ex.tokens[i]);
      a1_first = std::min(a1_first, i);
      a1_last = std::max(a1_last, i);
    }
    if (ex.mask2[i]) {
      feats.push_back("a2:w=" + ex.tokens[i]);
      a2_first = std::min(a2_first, i);
      a2_last = std::max(a2_last, i);
    }
  }
  const bool arg1_first = a1_first < a2_first;
  feats.push_back(arg1_first ? "order=12" : "order=21");
  feats.push_back("a1first=" + ex.tokens[a1_first]);
  feats.push_back("a1last=" + ex.tokens[a1_last]);
  feats.push_back("a2first=" + ex.tokens[a2_first]);
  feats.push_back("a2last=" + ex.tokens[a2_last]);

  const std::size_t gap_begin = arg1_first ? a1_last + 1 : a2_last + 1;
  const std::size_t gap_end = arg1_first ? a2_first : a1_first;
  std::size_t dist = 0;
  for (std::size_t i = gap_begin; i < gap_end; ++i) {
    feats.push_back("mid:w=" + ex.tokens[i]);
    ++dist;
  }
  const char* bucket = dist == 0 ? "0" : dist <= 2 ? "1-2" : dist <= 5 ? "3-5" : "6+";
  feats.push_back(std::string("dist=") + bucket);

  std::sort(feats.begin(), feats.end());
  feats.erase(std::unique(feats.begin(), feats.end()), feats.end());
  return feats;
}

enum class RcLoss : std::uint8_t { Mse, CrossEntropy };

inline std::string_view to_string(RcLoss l) { return l == RcLoss::Mse ? "mse" : "cross-entropy"; }

struct RcModel {
  FeatureInterner features;
  std::vector<std::array<double, kNumRelationLabels>> weights;  // per feature id
  std::array<double, kNumRelationLabels> bias{};
  RcLoss loss = RcLoss::Mse;
  // label order is fixed: CAUSE, COMPARE, ISA, PARTOF, SYNONYMS, USAGE
};

inline std::array<double, kNumRelationLabels> softmax(
    std::array<double, kNumRelationLabels> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

namespace detail {

inline std::array<double, kNumRelationLabels> rc_logits(const RcModel& model,
                                                        const std::vector<std::uint32_t>& ids) {
  std::array<double, kNumRelationLabels> z = model.bias;
  for (std::uint32_t f : ids)
    for (std::size_t k = 0; k < kNumRelationLabels; ++k) z[k] += model.weights[f][k];
  return z;
}

inline std::vector<std::uint32_t> rc_lookup(const RcModel& model, const RelationExample& ex) {
  std::vector<std::uint32_t> ids;
  for (const std::string& s : featurize_pair(ex))
    if (auto id = model.features.find(s)) ids.push_back(*id);
  return ids;
}

// dL/dz for one example given p = softmax(z) and one-hot target y.
inline std::array<double, kNumRelationLabels> loss_grad_logits(
    RcLoss loss, const std::array<double, kNumRelationLabels>& p, std::size_t y) {
  std::array<double, kNumRelationLabels> g{};
  if (loss == RcLoss::CrossEntropy) {
    for (std::size_t k = 0; k < kNumRelationLabels; ++k) g[k] = p[k];
    g[y] -= 1.0;
    return g;
  }
  // MSE through softmax: dL/dz_j = 2 p_j [(p_j - y_j) - sum_k (p_k - y_k) p_k]
  double dot = 0.0;
  for (std::size_t k = 0; k < kNumRelationLabels; ++k) {
    const double r = p[k] - (k == y ? 1.0 : 0.0);
    dot += r * p[k];
  }
  for (std::size_t j = 0; j < kNumRelationLabels; ++j) {
    const double r = p[j] - (j == y ? 1.0 : 0.0);
    g[j] = 2.0 * p[j] * (r - dot);
  }
  return g;
}

inline double loss_value(RcLoss loss, const std::array<double, kNumRelationLabels>& p,
                         std::size_t y) {
  if (loss == RcLoss::CrossEntropy) return -std::log(std::max(p[y], 1e-300));
  double s = 0.0;
  for (std::size_t k = 0; k < kNumRelationLabels; ++k) {
    const double r = p[k] - (k == y ? 1.0 : 0.0);
    s += r * r;
  }
  return s;
}

}  // namespace detail

inline std::pair<RelationLabel, std::array<double, kNumRelationLabels>> predict(
    const RcModel& model, const RelationExample& ex) {
  const auto p = softmax(detail::rc_logits(model, detail::rc_lookup(model, ex)));
  std::size_t best = 0;
  for (std::size_t k = 1; k < kNumRelationLabels; ++k)
    if (p[k] > p[best]) best = k;
  return {kRelationLabels[best], p};
}

struct RcTrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 2.0;
  RcLoss loss = RcLoss::Mse;
  std::uint64_t seed = 13;  // reserved for stochastic variants; training is full-batch
};

struct RcTrainLog {
  // epoch_loss[0] is the mean loss before training, epoch_loss[e] after epoch e.
  std::vector<double> epoch_loss;
};

inline RcModel train_rc(const std::vector<RelationExample>& examples, const RcTrainConfig& cfg,
                        RcTrainLog* log = nullptr) {
  RcModel model;
  model.loss = cfg.loss;

  if (examples.empty()) throw ValidityError("train_rc: empty training set");
  std::vector<std::vector<std::uint32_t>> ids(examples.size());
  std::vector<std::size_t> target(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (!examples[i].label)
      throw ValidityError("train_rc: example " + std::to_string(i) + " has no label");
    target[i] = static_cast<std::size_t>(*examples[i].label);
    for (const std::string& s : featurize_pair(examples[i]))
      ids[i].push_back(model.features.intern(s));
  }
  model.weights.assign(model.features.size(), {});

  const double inv_n = 1.0 / static_cast<double>(examples.size());
  auto mean_loss = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < examples.size(); ++i)
      s += detail::loss_value(cfg.loss, softmax(detail::rc_logits(model, ids[i])), target[i]);
    return s * inv_n;
  };
  if (log) log->epoch_loss.assign(1, mean_loss());

  std::vector<std::array<double, kNumRelationLabels>> wgrad(model.weights.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (auto& g : wgrad) g.fill(0.0);
    std::array<double, kNumRelationLabels> bgrad{};
    for (std::size_t i = 0; i < examples.size(); ++i) {
      const auto p = softmax(detail::rc_logits(model, ids[i]));
      for (double v : p)
        if (!std::isfinite(v))
          throw std::runtime_error("train_rc: non-finite probabilities at epoch " +
                                   std::to_string(epoch) + ", example " + std::to_string(i));
      const auto gz = detail::loss_grad_logits(cfg.loss, p, target[i]);
      for (std::size_t k = 0; k < kNumRelationLabels; ++k) bgrad[k] += gz[k];
      for (std::uint32_t f : ids[i])
        for (std::size_t k = 0; k < kNumRelationLabels; ++k) wgrad[f][k] += gz[k];
    }
    for (std::size_t f = 0; f < model.weights.size(); ++f)
      for (std::size_t k = 0; k < kNumRelationLabels; ++k)
        model.weights[f][k] -= cfg.learning_rate * inv_n * wgrad[f][k];
    for (std::size_t k = 0; k < kNumRelationLabels; ++k)
      model.bias[k] -= cfg.learning_rate * inv_n * bgrad[k];
    if (log) log->epoch_loss.push_back(mean_loss());
  }
  return model;
}

// ---------------------------------------------------------------------------
// Persistence

inline void save_rc(const RcModel& model, std::ostream& out) {
  nlohmann::json j;
  j["format"] = "termex-rc";
  j["version"] = 1;
  j["loss"] = model.loss == RcLoss::Mse ? "mse" : "cross-entropy";
  std::vector<std::string> labels;
  for (const auto name : kRelationLabelNames) labels.emplace_back(name);
  j["labels"] = labels;
  j["bias"] = model.bias;
  nlohmann::json weights = nlohmann::json::object();
  for (std::size_t f = 0; f < model.weights.size(); ++f)
    weights[model.features.name(static_cast<std::uint32_t>(f))] = model.weights[f];
  j["weights"] = std::move(weights);
  out << j.dump() << '\n';
}

inline RcModel load_rc(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model file: ") + e.what());
  }
  if (j.value("format", "") != "termex-rc") throw ParseError("not a termex-rc model file");
  RcModel model;
  model.loss = j.at("loss").get<std::string>() == "mse" ? RcLoss::Mse : RcLoss::CrossEntropy;
  model.bias = j.at("bias").get<std::array<double, kNumRelationLabels>>();
  for (const auto& [name, w] : j.at("weights").items()) {
    const std::uint32_t id = model.features.intern(name);
    model.weights.resize(model.features.size());
    model.weights[id] = w.get<std::array<double, kNumRelationLabels>>();
  }
  return model;
}

// Seeded document-level split; the held-out share is the bundled-experiment
// convention of 10%.
inline std::pair<Corpus, Corpus> split_documents(const Corpus& corpus, double held_out_fraction,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_test = static_cast<std::size_t>(
      std::floor(held_out_fraction * static_cast<double>(corpus.size()) + 0.5));
  Corpus train, test;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_test ? test : train).push_back(corpus[order[i]]);
  return {std::move(train), std::move(test)};
}

}  // namespace termex

#endif  // TERMEX_RELATION_HPP
