#ifndef TERMEX_CRF_HPP
#define TERMEX_CRF_HPP

// Linear-chain CRF over {O, B-TERM, I-TERM} with hand-crafted indicator
// features, trained by SGD on the negative conditional log-likelihood.
// All lattice arithmetic is in log space with log-sum-exp stabilization.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "termex/corpus.hpp"
#include "termex/dictionary.hpp"
#include "termex/tokenize.hpp"

namespace termex {

inline constexpr int kTagO = 0;
inline constexpr int kTagB = 1;
inline constexpr int kTagI = 2;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp3(double a, double b, double c) {
  const double m = std::max(a, std::max(b, c));
  if (m == kNegInf) return kNegInf;
  return m + std::log(std::exp(a - m) + std::exp(b - m) + std::exp(c - m));
}

class FeatureInterner {
 public:
  std::uint32_t intern(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    const std::uint32_t id = static_cast<std::uint32_t>(names_.size());
    index_.emplace(name, id);
    names_.push_back(name);
    return id;
  }

  std::optional<std::uint32_t> find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(std::uint32_t id) const { return names_[id]; }
  std::size_t size() const { return names_.size(); }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> names_;
};

// Sorted unique feature ids of one token position; all values are 1.
using FeatureVector = std::vector<std::uint32_t>;

struct CrfFeatureConfig {
  bool use_dictionary = true;   // emit dictionary-membership flags when a dict is given
  std::size_t context_window = 2;
  std::size_t affix_min = 2;
  std::size_t affix_max = 4;
};

namespace detail {

inline void shape_features(std::string_view text, const std::string& prefix,
                           std::vector<std::string>& out) {
  bool lat = false, cyr = false, dig = false, hyp = false;
  bool any_letter = false, all_caps = true;
  for (const Codepoint& c : decode_utf8(text)) {
    const char32_t v = c.value;
    if ((v >= U'a' && v <= U'z') || (v >= U'A' && v <= U'Z')) lat = true;
    if (v >= 0x0400 && v <= 0x04FF) cyr = true;
    if (is_ascii_digit(v)) dig = true;
    if (v == U'-') hyp = true;
    if (is_letter(v)) {
      any_letter = true;
      all_caps &= is_upper(v);
    }
  }
  if (lat) out.push_back(prefix + "sh:lat");
  if (cyr) out.push_back(prefix + "sh:cyr");
  if (dig) out.push_back(prefix + "sh:dig");
  if (hyp) out.push_back(prefix + "sh:hyp");
  if (any_letter && all_caps) out.push_back(prefix + "sh:caps");
}

inline void base_features(std::string_view text, const std::string& norm, bool in_dict,
                          const std::string& prefix, const CrfFeatureConfig& cfg,
                          std::vector<std::string>& out) {
  out.push_back(prefix + "w=" + norm);
  shape_features(text, prefix, out);
  const std::size_t len = codepoint_count(norm);
  for (std::size_t k = cfg.affix_min; k <= cfg.affix_max; ++k) {
    if (len < k) break;
    out.push_back(prefix + "p" + std::to_string(k) + "=" + prefix_codepoints(norm, k));
    out.push_back(prefix + "s" + std::to_string(k) + "=" + suffix_codepoints(norm, k));
  }
  if (in_dict) out.push_back(prefix + "dict");
}

}  // namespace detail

// Human-readable feature strings, one vector per token. Kept separate from
// interning so tests can assert on names.
inline std::vector<std::vector<std::string>> token_feature_strings(
    const Sentence& sentence, const TermDictionary* dict, const CrfFeatureConfig& cfg) {
  const std::size_t n = sentence.size();
  std::vector<std::string> norm(n);
  for (std::size_t i = 0; i < n; ++i) norm[i] = lowercase_normalize(sentence.tokens[i].text);

  std::vector<bool> in_dict(n, false);
  if (cfg.use_dictionary && dict && !dict->empty())
    for (const TermSpan& sp : annotate_with_dictionary(sentence, *dict))
      for (std::size_t i = sp.start; i < sp.end; ++i) in_dict[i] = true;

  std::vector<std::vector<std::string>> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<std::string>& feats = out[t];
    detail::base_features(sentence.tokens[t].text, norm[t], in_dict[t], "", cfg, feats);
    if (t == 0) feats.push_back("bos");
    if (t + 1 == n) feats.push_back("eos");
    for (int d = -static_cast<int>(cfg.context_window); d <= static_cast<int>(cfg.context_window);
         ++d) {
      if (d == 0) continue;
      const std::string prefix = (d > 0 ? "+" + std::to_string(d) : std::to_string(d)) + ":";
      const long j = static_cast<long>(t) + d;
      if (j < 0) {
        feats.push_back(prefix + "<s>");
      } else if (j >= static_cast<long>(n)) {
        feats.push_back(prefix + "</s>");
      } else {
        detail::base_features(sentence.tokens[j].text, norm[j], in_dict[j], prefix, cfg, feats);
      }
    }
  }
  return out;
}

struct CrfModel {
  CrfFeatureConfig feature_config;
  bool constrained = true;  // block start->I-TERM and O->I-TERM
  double l2 = 1e-4;
  FeatureInterner features;
  std::vector<std::array<double, 3>> emission;  // per feature id
  std::array<double, 3> start{};
  std::array<std::array<double, 3>, 3> trans{};

  bool start_allowed(int y) const { return !constrained || y != kTagI; }
  bool trans_allowed(int a, int b) const {
    return !constrained || !(a == kTagO && b == kTagI);
  }
  double start_score(int y) const { return start_allowed(y) ? start[y] : kNegInf; }
  double trans_score(int a, int b) const { return trans_allowed(a, b) ? trans[a][b] : kNegInf; }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& e : emission)
      for (double w : e) s += w * w;
    for (int y = 0; y < 3; ++y)
      if (start_allowed(y)) s += start[y] * start[y];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (trans_allowed(a, b)) s += trans[a][b] * trans[a][b];
    return s;
  }
};

// Interning featurization (training path): unseen feature strings get fresh
// ids and zero weights.
inline std::vector<FeatureVector> featurize(CrfModel& model, const Sentence& sentence,
                                            const TermDictionary* dict = nullptr) {
  const auto strings = token_feature_strings(sentence, dict, model.feature_config);
  std::vector<FeatureVector> out(strings.size());
  for (std::size_t t = 0; t < strings.size(); ++t) {
    for (const std::string& s : strings[t]) out[t].push_back(model.features.intern(s));
    std::sort(out[t].begin(), out[t].end());
    out[t].erase(std::unique(out[t].begin(), out[t].end()), out[t].end());
  }
  model.emission.resize(model.features.size(), {0.0, 0.0, 0.0});
  return out;
}

// Lookup-only featurization (inference path): unknown features are dropped.
inline std::vector<FeatureVector> featurize_lookup(const CrfModel& model,
                                                   const Sentence& sentence,
                                                   const TermDictionary* dict = nullptr) {
  const auto strings = token_feature_strings(sentence, dict, model.feature_config);
  std::vector<FeatureVector> out(strings.size());
  for (std::size_t t = 0; t < strings.size(); ++t) {
    for (const std::string& s : strings[t])
      if (auto id = model.features.find(s)) out[t].push_back(*id);
    std::sort(out[t].begin(), out[t].end());
    out[t].erase(std::unique(out[t].begin(), out[t].end()), out[t].end());
  }
  return out;
}

struct CrfLattice {
  std::vector<std::array<double, 3>> emit;
  std::vector<std::array<double, 3>> alpha;
  std::vector<std::array<double, 3>> beta;
  double log_z = 0.0;           // from the forward recursion
  double log_z_backward = 0.0;  // same quantity from the backward recursion
};

inline CrfLattice compute_lattice(const CrfModel& model,
                                  const std::vector<FeatureVector>& features) {
  const std::size_t n = features.size();
  if (n == 0) throw ValidityError("CRF lattice needs at least one token");
  CrfLattice lat;
  lat.emit.assign(n, {0.0, 0.0, 0.0});
  for (std::size_t t = 0; t < n; ++t)
    for (std::uint32_t f : features[t])
      for (int y = 0; y < 3; ++y) lat.emit[t][y] += model.emission[f][y];

  lat.alpha.assign(n, {kNegInf, kNegInf, kNegInf});
  for (int y = 0; y < 3; ++y) lat.alpha[0][y] = model.start_score(y) + lat.emit[0][y];
  for (std::size_t t = 1; t < n; ++t)
    for (int y = 0; y < 3; ++y) {
      std::array<double, 3> acc;
      for (int a = 0; a < 3; ++a) acc[a] = lat.alpha[t - 1][a] + model.trans_score(a, y);
      lat.alpha[t][y] = log_sum_exp3(acc[0], acc[1], acc[2]) + lat.emit[t][y];
    }
  lat.log_z = log_sum_exp3(lat.alpha[n - 1][0], lat.alpha[n - 1][1], lat.alpha[n - 1][2]);

  lat.beta.assign(n, {0.0, 0.0, 0.0});
  for (std::size_t t = n - 1; t-- > 0;)
    for (int y = 0; y < 3; ++y) {
      std::array<double, 3> acc;
      for (int b = 0; b < 3; ++b)
        acc[b] = model.trans_score(y, b) + lat.emit[t + 1][b] + lat.beta[t + 1][b];
      lat.beta[t][y] = log_sum_exp3(acc[0], acc[1], acc[2]);
    }
  std::array<double, 3> acc;
  for (int y = 0; y < 3; ++y) acc[y] = model.start_score(y) + lat.emit[0][y] + lat.beta[0][y];
  lat.log_z_backward = log_sum_exp3(acc[0], acc[1], acc[2]);
  return lat;
}

inline double log_partition(const CrfModel& model, const std::vector<FeatureVector>& features) {
  return compute_lattice(model, features).log_z;
}

// Per-position tag posteriors from forward-backward.
inline std::vector<std::array<double, 3>> tag_marginals(const CrfModel& model,
                                                        const CrfLattice& lat) {
  (void)model;
  std::vector<std::array<double, 3>> out(lat.alpha.size());
  for (std::size_t t = 0; t < lat.alpha.size(); ++t)
    for (int y = 0; y < 3; ++y) out[t][y] = std::exp(lat.alpha[t][y] + lat.beta[t][y] - lat.log_z);
  return out;
}

inline double path_score(const CrfModel& model, const CrfLattice& lat,
                         const std::vector<BioTag>& tags) {
  double s = model.start_score(static_cast<int>(tags[0])) + lat.emit[0][static_cast<int>(tags[0])];
  for (std::size_t t = 1; t < tags.size(); ++t)
    s += model.trans_score(static_cast<int>(tags[t - 1]), static_cast<int>(tags[t])) +
         lat.emit[t][static_cast<int>(tags[t])];
  return s;
}

struct CrfGradient {
  std::vector<std::array<double, 3>> emission;
  std::array<double, 3> start{};
  std::array<std::array<double, 3>, 3> trans{};
};

// NLL = logZ - score(gold) + (l2/2)||w||^2 and its full gradient
// (expected feature counts minus empirical counts plus l2*w).
inline std::pair<double, CrfGradient> nll_gradient(const CrfModel& model,
                                                   const std::vector<FeatureVector>& features,
                                                   const std::vector<BioTag>& gold) {
  if (gold.size() != features.size())
    throw ValidityError("gold tag count does not match featurized length");
  if (!valid_tag_sequence(gold)) throw ValidityError("gold tags violate BIO validity");

  const CrfLattice lat = compute_lattice(model, features);
  const std::size_t n = features.size();
  CrfGradient g;
  g.emission.assign(model.emission.size(), {0.0, 0.0, 0.0});

  const auto gamma = tag_marginals(model, lat);
  for (std::size_t t = 0; t < n; ++t) {
    const int gy = static_cast<int>(gold[t]);
    for (std::uint32_t f : features[t]) {
      for (int y = 0; y < 3; ++y) g.emission[f][y] += gamma[t][y];
      g.emission[f][gy] -= 1.0;
    }
  }
  for (int y = 0; y < 3; ++y)
    if (model.start_allowed(y)) g.start[y] = gamma[0][y];
  g.start[static_cast<int>(gold[0])] -= 1.0;

  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (int a = 0; a < 3; ++a) {
      if (lat.alpha[t][a] == kNegInf) continue;
      for (int b = 0; b < 3; ++b) {
        if (!model.trans_allowed(a, b)) continue;
        g.trans[a][b] += std::exp(lat.alpha[t][a] + model.trans[a][b] + lat.emit[t + 1][b] +
                                  lat.beta[t + 1][b] - lat.log_z);
      }
    }
    g.trans[static_cast<int>(gold[t])][static_cast<int>(gold[t + 1])] -= 1.0;
  }

  for (std::size_t f = 0; f < model.emission.size(); ++f)
    for (int y = 0; y < 3; ++y) g.emission[f][y] += model.l2 * model.emission[f][y];
  for (int y = 0; y < 3; ++y)
    if (model.start_allowed(y)) g.start[y] += model.l2 * model.start[y];
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (model.trans_allowed(a, b)) g.trans[a][b] += model.l2 * model.trans[a][b];

  const double nll =
      lat.log_z - path_score(model, lat, gold) + 0.5 * model.l2 * model.squared_norm();
  return {nll, std::move(g)};
}

// Argmax tag sequence; ties prefer the fixed order O < B-TERM < I-TERM.
inline std::vector<BioTag> viterbi_decode(const CrfModel& model,
                                          const std::vector<FeatureVector>& features) {
  const std::size_t n = features.size();
  if (n == 0) return {};
  std::vector<std::array<double, 3>> emit(n, {0.0, 0.0, 0.0});
  for (std::size_t t = 0; t < n; ++t)
    for (std::uint32_t f : features[t])
      for (int y = 0; y < 3; ++y) emit[t][y] += model.emission[f][y];

  std::vector<std::array<double, 3>> delta(n);
  std::vector<std::array<int, 3>> back(n);
  for (int y = 0; y < 3; ++y) {
    delta[0][y] = model.start_score(y) + emit[0][y];
    back[0][y] = -1;
  }
  for (std::size_t t = 1; t < n; ++t)
    for (int y = 0; y < 3; ++y) {
      double best = kNegInf;
      int arg = 0;
      for (int a = 0; a < 3; ++a) {
        const double s = delta[t - 1][a] + model.trans_score(a, y);
        if (s > best) {
          best = s;
          arg = a;
        }
      }
      delta[t][y] = best + emit[t][y];
      back[t][y] = arg;
    }

  int y = 0;
  double best = kNegInf;
  for (int c = 0; c < 3; ++c)
    if (delta[n - 1][c] > best) {
      best = delta[n - 1][c];
      y = c;
    }
  std::vector<BioTag> tags(n);
  for (std::size_t t = n; t-- > 0;) {
    tags[t] = static_cast<BioTag>(y);
    y = back[t][y];
  }
  return tags;
}

struct CrfTrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 0.1;  // eta_t = learning_rate / (1 + lr_decay * t)
  double lr_decay = 1e-4;
  double l2 = 1e-4;
  std::uint64_t seed = 13;
  bool constrained = true;
};

struct CrfTrainLog {
  // epoch_nll[0] is the data NLL before training, epoch_nll[e] after epoch e.
  std::vector<double> epoch_nll;
};

namespace detail {

struct CrfExample {
  std::vector<FeatureVector> features;
  std::vector<BioTag> tags;
};

inline double corpus_data_nll(const CrfModel& model, const std::vector<CrfExample>& examples) {
  double nll = 0.0;
  for (const CrfExample& ex : examples) {
    const CrfLattice lat = compute_lattice(model, ex.features);
    nll += lat.log_z - path_score(model, lat, ex.tags);
  }
  return nll;
}

}  // namespace detail

// SGD over shuffled sentences with inverse-time learning-rate decay. The l2
// term is applied to the weights each sentence touches.
inline CrfModel train_crf(const Corpus& labeled, const TermDictionary* dict,
                          const CrfFeatureConfig& fcfg, const CrfTrainConfig& cfg,
                          CrfTrainLog* log = nullptr) {
  CrfModel model;
  model.feature_config = fcfg;
  model.constrained = cfg.constrained;
  model.l2 = cfg.l2;

  std::vector<detail::CrfExample> examples;
  for (const Document& doc : labeled)
    for (const Sentence& sent : doc.sentences) {
      if (sent.tokens.empty()) continue;
      if (!sent.labeled())
        throw ValidityError("train_crf: unlabeled sentence in document '" + doc.doc_id + "'");
      if (!valid_tag_sequence(sent.tags))
        throw ValidityError("train_crf: invalid BIO sequence in document '" + doc.doc_id + "'");
      examples.push_back({featurize(model, sent, dict), sent.tags});
    }
  if (examples.empty()) throw ValidityError("train_crf: empty training set");

  if (log) log->epoch_nll.assign(1, detail::corpus_data_nll(model, examples));

  std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const std::size_t idx : order) {
      const detail::CrfExample& ex = examples[idx];
      const double eta = cfg.learning_rate / (1.0 + cfg.lr_decay * static_cast<double>(step));
      ++step;

      const CrfLattice lat = compute_lattice(model, ex.features);
      if (!std::isfinite(lat.log_z))
        throw std::runtime_error("train_crf: non-finite log partition at epoch " +
                                 std::to_string(epoch) + ", sentence " + std::to_string(idx));
      const auto gamma = tag_marginals(model, lat);
      const std::size_t n = ex.features.size();

      for (std::size_t t = 0; t < n; ++t) {
        const int gy = static_cast<int>(ex.tags[t]);
        for (std::uint32_t f : ex.features[t]) {
          auto& w = model.emission[f];
          for (int y = 0; y < 3; ++y) w[y] -= eta * (gamma[t][y] + model.l2 * w[y]);
          w[gy] += eta;
        }
      }
      for (int y = 0; y < 3; ++y)
        if (model.start_allowed(y)) model.start[y] -= eta * (gamma[0][y] + model.l2 * model.start[y]);
      model.start[static_cast<int>(ex.tags[0])] += eta;

      for (std::size_t t = 0; t + 1 < n; ++t) {
        for (int a = 0; a < 3; ++a) {
          if (lat.alpha[t][a] == kNegInf) continue;
          for (int b = 0; b < 3; ++b) {
            if (!model.trans_allowed(a, b)) continue;
            const double xi = std::exp(lat.alpha[t][a] + model.trans[a][b] + lat.emit[t + 1][b] +
                                       lat.beta[t + 1][b] - lat.log_z);
            model.trans[a][b] -= eta * (xi + model.l2 * model.trans[a][b]);
          }
        }
        model.trans[static_cast<int>(ex.tags[t])][static_cast<int>(ex.tags[t + 1])] += eta;
      }
    }
    if (log) log->epoch_nll.push_back(detail::corpus_data_nll(model, examples));
  }
  return model;
}

// Decode one sentence into tags (convenience wrapper used by the tagger).
inline std::vector<BioTag> tag_sentence(const CrfModel& model, const Sentence& sentence,
                                        const TermDictionary* dict = nullptr) {
  if (sentence.tokens.empty()) return {};
  return viterbi_decode(model, featurize_lookup(model, sentence, dict));
}

// ---------------------------------------------------------------------------
// Persistence (JSON weight dump; keys sorted, so dumps are deterministic)

inline void save_crf(const CrfModel& model, std::ostream& out) {
  nlohmann::json j;
  j["format"] = "termex-crf";
  j["version"] = 1;
  j["constrained"] = model.constrained;
  j["l2"] = model.l2;
  j["feature_config"] = {{"use_dictionary", model.feature_config.use_dictionary},
                         {"context_window", model.feature_config.context_window},
                         {"affix_min", model.feature_config.affix_min},
                         {"affix_max", model.feature_config.affix_max}};
  j["tags"] = {"O", "B-TERM", "I-TERM"};
  j["start"] = model.start;
  j["transitions"] = model.trans;
  nlohmann::json weights = nlohmann::json::object();
  for (std::size_t f = 0; f < model.emission.size(); ++f)
    weights[model.features.name(static_cast<std::uint32_t>(f))] = model.emission[f];
  j["weights"] = std::move(weights);
  out << j.dump() << '\n';
}

inline CrfModel load_crf(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad model file: ") + e.what());
  }
  if (j.value("format", "") != "termex-crf")
    throw ParseError("not a termex-crf model file");
  CrfModel model;
  model.constrained = j.at("constrained").get<bool>();
  model.l2 = j.at("l2").get<double>();
  const auto& fc = j.at("feature_config");
  model.feature_config.use_dictionary = fc.at("use_dictionary").get<bool>();
  model.feature_config.context_window = fc.at("context_window").get<std::size_t>();
  model.feature_config.affix_min = fc.at("affix_min").get<std::size_t>();
  model.feature_config.affix_max = fc.at("affix_max").get<std::size_t>();
  model.start = j.at("start").get<std::array<double, 3>>();
  model.trans = j.at("transitions").get<std::array<std::array<double, 3>, 3>>();
  for (const auto& [name, w] : j.at("weights").items()) {
    const std::uint32_t id = model.features.intern(name);
    model.emission.resize(model.features.size(), {0.0, 0.0, 0.0});
    model.emission[id] = w.get<std::array<double, 3>>();
  }
  return model;
}

}  // namespace termex

#endif  // TERMEX_CRF_HPP
