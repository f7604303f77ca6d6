// termex — term extraction and relation classification toolkit for Russian
// scientific text. One executable, one subcommand per pipeline stage.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "termex/corpus.hpp"
#include "termex/crf.hpp"
#include "termex/dictionary.hpp"
#include "termex/eval.hpp"
#include "termex/rake.hpp"
#include "termex/relation.hpp"
#include "termex/tokenize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file '" + path + "'");
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

termex::Corpus load_bio(const std::string& path, bool repair = false) {
  std::ifstream in = open_input(path);
  try {
    return termex::parse_bio(in, {.repair = repair});
  } catch (const termex::ParseError& e) {
    throw DataError(path + ": " + e.what());
  } catch (const termex::ValidityError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<termex::RelationInstance> load_relations(const std::string& path,
                                                     bool require_label = true) {
  std::ifstream in = open_input(path);
  try {
    return termex::parse_relations(in, require_label);
  } catch (const termex::ParseError& e) {
    throw DataError(path + ": " + e.what());
  }
}

termex::TermDictionary load_dictionary(const std::string& path) {
  std::ifstream in = open_input(path);
  return termex::import_terms(in);
}

// One token per line; lines with several whitespace-separated tokens are
// split so that the set only ever holds single normalized tokens.
std::unordered_set<std::string> load_word_set(const std::string& path) {
  std::ifstream in = open_input(path);
  std::unordered_set<std::string> out;
  for (const std::string& line : termex::read_line_list(in)) {
    std::istringstream ss(line);
    std::string w;
    while (ss >> w) out.insert(termex::lowercase_normalize(w));
  }
  return out;
}

void check_written(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out.good()) throw DataError("failed while writing '" + path + "'");
}

std::string fnv1a_hex(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Per-run bookkeeping: declared outputs (removed on failure) and the
// run.json manifest written next to the first output.
struct RunContext {
  std::string command;
  json inputs = json::object();
  json effective = json::object();
  std::vector<std::string> outputs;
  std::uint64_t seed = 13;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  void declare_output(const std::string& path) { outputs.push_back(path); }

  void write_manifest() const {
    if (outputs.empty()) return;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json m;
    m["command"] = command;
    m["version"] = kVersion;
    m["inputs"] = inputs;
    m["outputs"] = outputs;
    m["config"] = effective;
    m["config_hash"] = fnv1a_hex(effective.dump());
    m["seed"] = seed;
    m["wall_time_s"] = wall;
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["timestamp"] = stamp;

    fs::path dir = fs::path(outputs.front()).parent_path();
    if (dir.empty()) dir = ".";
    std::ofstream out(dir / "run.json", std::ios::binary);
    if (out) out << m.dump(2) << '\n';
  }

  void remove_outputs() const {
    std::error_code ec;
    for (const std::string& p : outputs) fs::remove(p, ec);
  }
};

// Flat "stage.key" config file; command-line flags always win.
json load_config(int argc, char** argv) {
  std::string path;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) path = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0) path = a.substr(9);
  }
  if (path.empty()) return json::object();
  json cfg;
  try {
    std::ifstream in = open_input(path);
    in >> cfg;
  } catch (const json::exception& e) {
    throw DataError("config file '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw DataError("config file must hold a flat JSON object");
  return cfg;
}

template <typename T>
T cfg_default(const json& cfg, const std::string& key, T fallback) {
  if (cfg.contains(key)) return cfg.at(key).get<T>();
  return fallback;
}

// ---------------------------------------------------------------------------
// Input assembly

termex::Corpus tokenize_input(const std::string& path, const termex::TokenizerConfig& tok_cfg) {
  termex::Corpus corpus;
  auto add_doc = [&](const fs::path& p) {
    termex::Document doc;
    doc.doc_id = p.stem().string();
    doc.sentences = termex::tokenize(read_file(p.string()), tok_cfg);
    corpus.push_back(std::move(doc));
  };
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .txt files in directory '" + path + "'");
    for (const auto& p : files) add_doc(p);
  } else {
    add_doc(path);
  }
  return corpus;
}

void write_bio_file(const std::string& path, const termex::Corpus& corpus) {
  std::ofstream out = open_output(path);
  termex::write_bio(out, corpus);
  check_written(out, path);
}

json report_to_json(const termex::EvalReport& r) {
  return {{"mode", r.mode == termex::EvalReport::Mode::Exact ? "exact" : "fuzzy"},
          {"tp", r.tp},
          {"fp", r.fp},
          {"fn", r.fn},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f_score", r.f_score}};
}

void print_report(const termex::EvalReport& r) {
  std::cout << (r.mode == termex::EvalReport::Mode::Exact ? "exact" : "fuzzy")
            << "  P " << fmt2(r.precision) << "  R " << fmt2(r.recall) << "  F "
            << fmt2(r.f_score) << "  (tp " << r.tp << ", fp " << r.fp << ", fn " << r.fn
            << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"term extraction and relation classification for Russian scientific text"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  json cfg;
  try {
    cfg = load_config(argc, argv);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  std::string config_path;
  app.add_option("--config", config_path, "flat JSON config file (stage.key names)");
  bool quiet = cfg_default<bool>(cfg, "quiet", false);
  app.add_flag("--quiet", quiet, "suppress informational output");

  RunContext run;
  run.seed = cfg_default<std::uint64_t>(cfg, "seed", 13);
  const auto say = [&quiet](const std::string& line) {
    if (!quiet) std::cout << line << '\n';
  };

  // ---- tokenize ----
  auto* c_tok = app.add_subcommand("tokenize", "tokenize raw text into BIO (all O)");
  struct {
    std::string in, out, abbrev;
  } tok;
  c_tok->add_option("--in", tok.in, "text file or directory of .txt files")->required();
  c_tok->add_option("--out", tok.out, "output BIO file")->required();
  c_tok->add_option("--abbrev", tok.abbrev, "abbreviation list, one entry per line");

  // ---- stats ----
  auto* c_stats = app.add_subcommand("stats", "corpus statistics");
  struct {
    std::string bio, rel, json_out;
  } stats;
  c_stats->add_option("--bio", stats.bio, "BIO corpus")->required();
  c_stats->add_option("--rel", stats.rel, "relations JSONL");
  c_stats->add_option("--json", stats.json_out, "also write the statistics as JSON");

  // ---- agreement ----
  auto* c_agree = app.add_subcommand("agreement", "Jaccard agreement of two annotation sets");
  struct {
    std::string a, b, type = "er";
  } agree;
  c_agree->add_option("--a", agree.a, "first annotation file")->required();
  c_agree->add_option("--b", agree.b, "second annotation file")->required();
  c_agree->add_option("--type", agree.type, "er (BIO files) or rc (relation files)")
      ->check(CLI::IsMember({"er", "rc"}));

  // ---- mine-dict ----
  auto* c_mine = app.add_subcommand("mine-dict", "rank n-gram term candidates by TF-IDF");
  struct {
    std::string bio, out;
    std::size_t min_n = 2, max_n = 4, top = 0;
  } mine;
  c_mine->add_option("--bio", mine.bio, "BIO corpus")->required();
  c_mine->add_option("--out", mine.out, "candidate TSV (tfidf, tf, df, ngram)")->required();
  c_mine->add_option("--min-n", mine.min_n);
  c_mine->add_option("--max-n", mine.max_n);
  c_mine->add_option("--top", mine.top, "keep only the best N candidates");

  // ---- import-dict ----
  auto* c_import = app.add_subcommand("import-dict", "normalize and deduplicate a term list");
  struct {
    std::string in, out, provenance;
  } imp;
  c_import->add_option("--in", imp.in, "term list, one term per line")->required();
  c_import->add_option("--out", imp.out, "normalized dictionary file")->required();
  c_import->add_option("--provenance", imp.provenance, "sidecar JSON with entry provenance");

  // ---- annotate-dict ----
  auto* c_anno = app.add_subcommand("annotate-dict", "dictionary entity annotation");
  struct {
    std::string dict, in, out;
  } anno;
  c_anno->add_option("--dict", anno.dict, "dictionary file")->required();
  c_anno->add_option("--in", anno.in, "BIO corpus (tags ignored)")->required();
  c_anno->add_option("--out", anno.out, "output BIO with dictionary annotations")->required();

  // ---- auto-annotate ----
  auto* c_auto = app.add_subcommand("auto-annotate", "bulk dictionary annotation with a report");
  struct {
    std::string dict, in, out;
  } autoa;
  c_auto->add_option("--dict", autoa.dict, "dictionary file")->required();
  c_auto->add_option("--in", autoa.in, "BIO corpus or directory of .txt files")->required();
  c_auto->add_option("--out", autoa.out, "output BIO")->required();

  // ---- rake ----
  auto* c_rake = app.add_subcommand("rake", "RAKE keyword extraction to BIO predictions");
  struct {
    std::string in, out, stopwords, phrases, verbs;
    std::size_t auto_stopwords_n = 0;
    double top_fraction = 0.0;
    std::size_t max_phrase_len = 0, min_chars = 0;
    bool optimized = false, heuristic = false;
  } rake;
  c_rake->add_option("--in", rake.in, "BIO corpus (tags ignored)")->required();
  c_rake->add_option("--out", rake.out, "output BIO with predicted terms")->required();
  c_rake->add_option("--stopwords", rake.stopwords, "stopword file, one token per line");
  c_rake->add_option("--auto-stopwords", rake.auto_stopwords_n,
                     "induce N stopwords from the corpus (default 100 when no file given)");
  c_rake->add_option("--phrases", rake.phrases, "also write the ranked phrases as TSV");
  c_rake->add_option("--top-fraction", rake.top_fraction, "share of ranked phrases kept");
  c_rake->add_option("--max-phrase-len", rake.max_phrase_len);
  c_rake->add_option("--min-chars", rake.min_chars);
  c_rake->add_flag("--optimized", rake.optimized, "remove verb forms before extraction");
  c_rake->add_option("--verbs", rake.verbs, "verb lexicon file for --optimized");
  c_rake->add_flag("--heuristic", rake.heuristic, "enable the verb-suffix heuristic");

  // ---- train-crf ----
  auto* c_tcrf = app.add_subcommand("train-crf", "train the CRF tagger");
  struct {
    std::string train, dev, dict, out;
    std::size_t epochs = 0;
    double lr = -1.0, lr_decay = -1.0, l2 = -1.0;
    std::uint64_t seed = 0;
    bool seed_set = false, unconstrained = false;
  } tcrf;
  c_tcrf->add_option("--train", tcrf.train, "training BIO corpus")->required();
  c_tcrf->add_option("--dev", tcrf.dev, "held-out BIO corpus, span F printed per run");
  c_tcrf->add_option("--dict", tcrf.dict, "dictionary for membership features");
  c_tcrf->add_option("--out", tcrf.out, "model file")->required();
  c_tcrf->add_option("--epochs", tcrf.epochs);
  c_tcrf->add_option("--lr", tcrf.lr, "initial learning rate");
  c_tcrf->add_option("--lr-decay", tcrf.lr_decay, "inverse-time decay");
  c_tcrf->add_option("--l2", tcrf.l2);
  c_tcrf->add_option("--seed", tcrf.seed)->each([&](const std::string&) { tcrf.seed_set = true; });
  c_tcrf->add_flag("--unconstrained", tcrf.unconstrained, "disable BIO transition constraints");

  // ---- tag ----
  auto* c_tag = app.add_subcommand("tag", "tag a corpus with a trained CRF model");
  struct {
    std::string model, in, out, dict;
    bool text = false;
  } tag;
  c_tag->add_option("--model", tag.model)->required();
  c_tag->add_option("--in", tag.in, "BIO file, or raw text with --text")->required();
  c_tag->add_option("--out", tag.out, "output BIO")->required();
  c_tag->add_option("--dict", tag.dict, "dictionary for membership features");
  c_tag->add_flag("--text", tag.text, "treat --in as raw text (file or directory)");

  // ---- train-rc ----
  auto* c_trc = app.add_subcommand("train-rc", "train the relation classifier");
  struct {
    std::string bio, rel, out, loss = "";
    std::size_t epochs = 0;
    double lr = -1.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
  } trc;
  c_trc->add_option("--bio", trc.bio, "BIO corpus with the relation sentences")->required();
  c_trc->add_option("--rel", trc.rel, "labeled relations JSONL")->required();
  c_trc->add_option("--out", trc.out, "model file")->required();
  c_trc->add_option("--epochs", trc.epochs);
  c_trc->add_option("--lr", trc.lr);
  c_trc->add_option("--loss", trc.loss)->check(CLI::IsMember({"mse", "ce", ""}));
  c_trc->add_option("--seed", trc.seed)->each([&](const std::string&) { trc.seed_set = true; });

  // ---- predict-rc ----
  auto* c_prc = app.add_subcommand("predict-rc", "label relation pairs with a trained model");
  struct {
    std::string model, bio, rel, out;
  } prc;
  c_prc->add_option("--model", prc.model)->required();
  c_prc->add_option("--bio", prc.bio)->required();
  c_prc->add_option("--rel", prc.rel, "relation pairs (labels optional, ignored)")->required();
  c_prc->add_option("--out", prc.out, "predicted relations JSONL")->required();

  // ---- eval-er ----
  auto* c_eer = app.add_subcommand("eval-er", "entity span evaluation");
  struct {
    std::string gold, pred, mode = "both", json_out;
    bool repair = false;
  } eer;
  c_eer->add_option("--gold", eer.gold)->required();
  c_eer->add_option("--pred", eer.pred)->required();
  c_eer->add_option("--mode", eer.mode)->check(CLI::IsMember({"exact", "fuzzy", "both"}));
  c_eer->add_option("--json", eer.json_out, "write the reports as JSON");
  c_eer->add_flag("--repair", eer.repair, "repair orphan I-TERM in predictions");

  // ---- eval-rc ----
  auto* c_erc = app.add_subcommand("eval-rc", "relation classification evaluation");
  struct {
    std::string gold, pred, json_out;
  } erc;
  c_erc->add_option("--gold", erc.gold)->required();
  c_erc->add_option("--pred", erc.pred)->required();
  c_erc->add_option("--json", erc.json_out, "write the report as JSON");

  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 1;
  }

  try {
    // -------------------------------------------------- tokenize
    if (*c_tok) {
      run.command = "tokenize";
      termex::TokenizerConfig tok_cfg = termex::TokenizerConfig::defaults();
      if (!tok.abbrev.empty()) {
        std::ifstream in = open_input(tok.abbrev);
        tok_cfg.abbreviations.clear();
        for (const std::string& a : termex::read_line_list(in)) tok_cfg.abbreviations.insert(a);
      }
      run.inputs = {{"in", tok.in}, {"abbrev", tok.abbrev}};
      run.declare_output(tok.out);
      const termex::Corpus corpus = tokenize_input(tok.in, tok_cfg);
      write_bio_file(tok.out, corpus);
      std::size_t n_tokens = 0;
      for (const auto& d : corpus)
        for (const auto& s : d.sentences) n_tokens += s.size();
      say("documents " + std::to_string(corpus.size()) + ", tokens " + std::to_string(n_tokens));
    }

    // -------------------------------------------------- stats
    if (*c_stats) {
      run.command = "stats";
      const termex::Corpus corpus = load_bio(stats.bio);
      std::vector<termex::RelationInstance> rels;
      if (!stats.rel.empty()) {
        rels = load_relations(stats.rel);
        termex::validate_relations(rels, corpus);
      }
      const termex::CorpusStats st = termex::corpus_stats(corpus, rels);
      std::cout << "documents      " << st.n_documents << '\n'
                << "tokens         " << st.n_tokens << '\n'
                << "terms          " << st.n_terms << '\n'
                << "mean_term_len  " << fmt2(st.mean_term_len) << '\n'
                << "max_term_len   " << st.max_term_len << '\n';
      if (!stats.rel.empty()) {
        std::cout << "relations      " << st.n_relations() << '\n';
        for (const auto& [label, count] : st.relation_counts)
          std::cout << "  " << termex::to_string(label) << ' ' << count << '\n';
      }
      if (!stats.json_out.empty()) {
        run.inputs = {{"bio", stats.bio}, {"rel", stats.rel}};
        run.declare_output(stats.json_out);
        json j = {{"documents", st.n_documents},
                  {"tokens", st.n_tokens},
                  {"terms", st.n_terms},
                  {"mean_term_len", st.mean_term_len},
                  {"max_term_len", st.max_term_len}};
        json rc = json::object();
        for (const auto& [label, count] : st.relation_counts)
          rc[std::string(termex::to_string(label))] = count;
        j["relation_counts"] = rc;
        open_output(stats.json_out) << j.dump(2) << '\n';
      }
    }

    // -------------------------------------------------- agreement
    if (*c_agree) {
      run.command = "agreement";
      double value = 0.0;
      if (agree.type == "er") {
        const auto a = termex::doc_span_set(load_bio(agree.a));
        const auto b = termex::doc_span_set(load_bio(agree.b));
        value = termex::agreement(a, b);
      } else {
        const auto ra = load_relations(agree.a);
        const auto rb = load_relations(agree.b);
        const std::set<termex::RelationInstance> a(ra.begin(), ra.end());
        const std::set<termex::RelationInstance> b(rb.begin(), rb.end());
        value = termex::agreement(a, b);
      }
      std::cout << fmt4(value) << '\n';
    }

    // -------------------------------------------------- mine-dict
    if (*c_mine) {
      run.command = "mine-dict";
      mine.min_n = cfg_default<std::size_t>(cfg, "mine-dict.min-n", mine.min_n);
      mine.max_n = cfg_default<std::size_t>(cfg, "mine-dict.max-n", mine.max_n);
      const termex::Corpus corpus = load_bio(mine.bio);
      auto cands = termex::mine_candidates(corpus, mine.min_n, mine.max_n);
      if (mine.top && cands.size() > mine.top) cands.resize(mine.top);
      run.inputs = {{"bio", mine.bio}};
      run.declare_output(mine.out);
      std::ofstream out = open_output(mine.out);
      for (const auto& c : cands)
        out << fmt6(c.tfidf) << '\t' << c.tf << '\t' << c.df << '\t' << c.joined() << '\n';
      check_written(out, mine.out);
      say("candidates " + std::to_string(cands.size()));
    }

    // -------------------------------------------------- import-dict
    if (*c_import) {
      run.command = "import-dict";
      std::ifstream in = open_input(imp.in);
      const termex::TermDictionary dict = termex::import_terms(in);
      run.inputs = {{"in", imp.in}};
      run.declare_output(imp.out);
      {
        std::ofstream out = open_output(imp.out);
        termex::write_terms(out, dict);
        check_written(out, imp.out);
      }
      if (!imp.provenance.empty()) {
        run.declare_output(imp.provenance);
        json j = json::object();
        for (const auto& [key, src] : dict.sorted_entries())
          j[key] = std::string(termex::to_string(src));
        open_output(imp.provenance) << j.dump(2) << '\n';
      }
      say("entries " + std::to_string(dict.size()));
    }

    // -------------------------------------------------- annotate-dict
    if (*c_anno) {
      run.command = "annotate-dict";
      const termex::TermDictionary dict = load_dictionary(anno.dict);
      if (dict.empty()) throw DataError("dictionary '" + anno.dict + "' is empty");
      const termex::Corpus corpus = load_bio(anno.in);
      run.inputs = {{"dict", anno.dict}, {"in", anno.in}};
      run.declare_output(anno.out);
      write_bio_file(anno.out, termex::annotate_corpus(corpus, dict));
    }

    // -------------------------------------------------- auto-annotate
    if (*c_auto) {
      run.command = "auto-annotate";
      const termex::TermDictionary dict = load_dictionary(autoa.dict);
      if (dict.empty()) throw DataError("dictionary '" + autoa.dict + "' is empty");
      termex::Corpus corpus;
      if (fs::is_directory(autoa.in))
        corpus = tokenize_input(autoa.in, termex::TokenizerConfig::defaults());
      else
        corpus = load_bio(autoa.in);
      run.inputs = {{"dict", autoa.dict}, {"in", autoa.in}};
      run.declare_output(autoa.out);
      std::ofstream out = open_output(autoa.out);
      const termex::AutoAnnotateReport rep = termex::auto_annotate(corpus, dict, out);
      check_written(out, autoa.out);
      say("tokens " + std::to_string(rep.n_tokens) + ", terms " + std::to_string(rep.n_terms));
      run.effective["auto-annotate.tokens"] = rep.n_tokens;
      run.effective["auto-annotate.terms"] = rep.n_terms;
    }

    // -------------------------------------------------- rake
    if (*c_rake) {
      run.command = "rake";
      termex::RakeConfig rk;
      rk.top_fraction = rake.top_fraction > 0.0
                            ? rake.top_fraction
                            : cfg_default<double>(cfg, "rake.top-fraction", rk.top_fraction);
      if (rake.max_phrase_len) rk.max_phrase_len = rake.max_phrase_len;
      if (rake.min_chars) rk.min_chars = rake.min_chars;
      if (rk.top_fraction <= 0.0 || rk.top_fraction > 1.0)
        throw UsageError("--top-fraction must be in (0, 1]");

      termex::VerbResources verbs;
      const termex::VerbResources* verbs_ptr = nullptr;
      rk.verb_filter_enabled = rake.optimized;
      if (rake.optimized) {
        verbs.heuristic_enabled = rake.heuristic;
        if (!rake.verbs.empty()) verbs.lexicon = load_word_set(rake.verbs);
        if (verbs.lexicon.empty() && !verbs.heuristic_enabled)
          throw UsageError("--optimized needs --verbs and/or --heuristic");
        verbs_ptr = &verbs;
      } else if (!rake.verbs.empty() || rake.heuristic) {
        throw UsageError("--verbs/--heuristic make sense only with --optimized");
      }

      const termex::Corpus corpus = load_bio(rake.in);
      termex::StopwordList stopwords;
      if (!rake.stopwords.empty()) {
        stopwords.words = load_word_set(rake.stopwords);
        stopwords.source = termex::StopwordList::Source::Provided;
      } else {
        const std::size_t n = rake.auto_stopwords_n
                                  ? rake.auto_stopwords_n
                                  : cfg_default<std::size_t>(cfg, "rake.auto-stopwords",
                                                             termex::RakeConfig{}.auto_stopwords_n);
        stopwords = termex::auto_stopwords(corpus, n);
      }

      run.inputs = {{"in", rake.in}, {"stopwords", rake.stopwords}, {"verbs", rake.verbs}};
      run.effective["rake.top-fraction"] = rk.top_fraction;
      run.effective["rake.optimized"] = rake.optimized;
      run.declare_output(rake.out);

      const termex::RakeResult result = termex::rake_extract(corpus, stopwords, rk, verbs_ptr);
      termex::Corpus pred = corpus;
      for (std::size_t d = 0; d < pred.size(); ++d) {
        std::vector<std::vector<termex::TermSpan>> by_sentence(pred[d].sentences.size());
        for (const termex::TermSpan& sp : result.spans_per_doc[d])
          by_sentence[sp.sent_index].push_back(sp);
        for (std::size_t s = 0; s < pred[d].sentences.size(); ++s)
          pred[d].sentences[s].tags =
              termex::tags_from_spans(by_sentence[s], pred[d].sentences[s].size());
      }
      write_bio_file(rake.out, pred);

      if (!rake.phrases.empty()) {
        run.declare_output(rake.phrases);
        std::ofstream out = open_output(rake.phrases);
        for (const auto& p : result.phrases) {
          out << fmt6(p.score) << '\t';
          for (std::size_t i = 0; i < p.tokens.size(); ++i) {
            if (i) out << ' ';
            out << p.tokens[i];
          }
          out << '\n';
        }
      }
      say("phrases " + std::to_string(result.phrases.size()));
    }

    // -------------------------------------------------- train-crf
    if (*c_tcrf) {
      run.command = "train-crf";
      termex::CrfTrainConfig t;
      t.epochs = tcrf.epochs ? tcrf.epochs
                             : cfg_default<std::size_t>(cfg, "train-crf.epochs", 30);
      t.learning_rate = tcrf.lr > 0 ? tcrf.lr : cfg_default<double>(cfg, "train-crf.lr", 0.1);
      t.lr_decay =
          tcrf.lr_decay >= 0 ? tcrf.lr_decay : cfg_default<double>(cfg, "train-crf.lr-decay", 1e-4);
      t.l2 = tcrf.l2 >= 0 ? tcrf.l2 : cfg_default<double>(cfg, "train-crf.l2", 1e-4);
      t.seed = tcrf.seed_set ? tcrf.seed : run.seed;
      t.constrained = !tcrf.unconstrained;
      run.seed = t.seed;

      const termex::Corpus train = load_bio(tcrf.train);
      termex::Corpus dev;
      if (!tcrf.dev.empty()) dev = load_bio(tcrf.dev);
      termex::TermDictionary dict;
      if (!tcrf.dict.empty()) dict = load_dictionary(tcrf.dict);
      termex::CrfFeatureConfig fcfg;
      fcfg.use_dictionary = !tcrf.dict.empty();

      run.inputs = {{"train", tcrf.train}, {"dev", tcrf.dev}, {"dict", tcrf.dict}};
      run.effective["train-crf.epochs"] = t.epochs;
      run.effective["train-crf.lr"] = t.learning_rate;
      run.effective["train-crf.lr-decay"] = t.lr_decay;
      run.effective["train-crf.l2"] = t.l2;
      run.effective["train-crf.constrained"] = t.constrained;
      run.declare_output(tcrf.out);

      termex::CrfTrainLog tlog;
      const termex::CrfModel model =
          termex::train_crf(train, tcrf.dict.empty() ? nullptr : &dict, fcfg, t, &tlog);
      for (std::size_t e = 0; e < tlog.epoch_nll.size(); ++e)
        say((e == 0 ? "initial" : "epoch " + std::to_string(e)) + " nll " +
            fmt4(tlog.epoch_nll[e]));

      if (!tcrf.dev.empty()) {
        termex::Corpus pred = dev;
        for (auto& doc : pred)
          for (auto& s : doc.sentences)
            s.tags = termex::tag_sentence(model, s, tcrf.dict.empty() ? nullptr : &dict);
        const termex::EvalReport r = termex::eval_spans_exact(dev, pred);
        say("dev exact F " + fmt4(r.f_score));
      }
      std::ofstream out = open_output(tcrf.out);
      termex::save_crf(model, out);
      check_written(out, tcrf.out);
    }

    // -------------------------------------------------- tag
    if (*c_tag) {
      run.command = "tag";
      std::ifstream min = open_input(tag.model);
      const termex::CrfModel model = termex::load_crf(min);
      termex::TermDictionary dict;
      const termex::TermDictionary* dict_ptr = nullptr;
      if (!tag.dict.empty()) {
        dict = load_dictionary(tag.dict);
        dict_ptr = &dict;
      }
      termex::Corpus corpus = tag.text
                                  ? tokenize_input(tag.in, termex::TokenizerConfig::defaults())
                                  : load_bio(tag.in);
      for (auto& doc : corpus)
        for (auto& s : doc.sentences) s.tags = termex::tag_sentence(model, s, dict_ptr);
      run.inputs = {{"model", tag.model}, {"in", tag.in}, {"dict", tag.dict}};
      run.declare_output(tag.out);
      write_bio_file(tag.out, corpus);
    }

    // -------------------------------------------------- train-rc
    if (*c_trc) {
      run.command = "train-rc";
      termex::RcTrainConfig t;
      t.epochs = trc.epochs ? trc.epochs : cfg_default<std::size_t>(cfg, "train-rc.epochs", 30);
      t.learning_rate = trc.lr > 0 ? trc.lr : cfg_default<double>(cfg, "train-rc.lr", 2.0);
      const std::string loss =
          !trc.loss.empty() ? trc.loss : cfg_default<std::string>(cfg, "train-rc.loss", "mse");
      t.loss = loss == "ce" ? termex::RcLoss::CrossEntropy : termex::RcLoss::Mse;
      t.seed = trc.seed_set ? trc.seed : run.seed;
      run.seed = t.seed;

      const termex::Corpus corpus = load_bio(trc.bio);
      const auto rels = load_relations(trc.rel);
      const auto examples = termex::relation_examples(corpus, rels);

      run.inputs = {{"bio", trc.bio}, {"rel", trc.rel}};
      run.effective["train-rc.epochs"] = t.epochs;
      run.effective["train-rc.lr"] = t.learning_rate;
      run.effective["train-rc.loss"] = loss;
      run.declare_output(trc.out);

      termex::RcTrainLog tlog;
      const termex::RcModel model = termex::train_rc(examples, t, &tlog);
      for (std::size_t e = 0; e < tlog.epoch_loss.size(); ++e)
        say((e == 0 ? "initial" : "epoch " + std::to_string(e)) + " loss " +
            fmt6(tlog.epoch_loss[e]));
      std::ofstream out = open_output(trc.out);
      termex::save_rc(model, out);
      check_written(out, trc.out);
    }

    // -------------------------------------------------- predict-rc
    if (*c_prc) {
      run.command = "predict-rc";
      std::ifstream min = open_input(prc.model);
      const termex::RcModel model = termex::load_rc(min);
      const termex::Corpus corpus = load_bio(prc.bio);
      auto rels = load_relations(prc.rel, /*require_label=*/false);
      termex::validate_relations(rels, corpus);

      std::map<std::string_view, const termex::Document*> by_id;
      for (const auto& d : corpus) by_id[d.doc_id] = &d;
      for (auto& r : rels) {
        const auto ex = termex::make_relation_example(by_id.at(r.doc_id)->sentences[r.sent_index],
                                                      r.arg1, r.arg2);
        r.label = termex::predict(model, ex).first;
      }
      run.inputs = {{"model", prc.model}, {"bio", prc.bio}, {"rel", prc.rel}};
      run.declare_output(prc.out);
      std::ofstream out = open_output(prc.out);
      termex::write_relations(out, rels);
      check_written(out, prc.out);
      say("predicted " + std::to_string(rels.size()) + " relations");
    }

    // -------------------------------------------------- eval-er
    if (*c_eer) {
      run.command = "eval-er";
      const termex::Corpus gold = load_bio(eer.gold);
      const termex::Corpus pred = load_bio(eer.pred, eer.repair);
      json reports = json::array();
      if (eer.mode == "exact" || eer.mode == "both") {
        const auto r = termex::eval_spans_exact(gold, pred);
        print_report(r);
        reports.push_back(report_to_json(r));
      }
      if (eer.mode == "fuzzy" || eer.mode == "both") {
        const auto r = termex::eval_spans_fuzzy(gold, pred);
        print_report(r);
        reports.push_back(report_to_json(r));
      }
      if (!eer.json_out.empty()) {
        run.inputs = {{"gold", eer.gold}, {"pred", eer.pred}};
        run.declare_output(eer.json_out);
        open_output(eer.json_out) << reports.dump(2) << '\n';
      }
    }

    // -------------------------------------------------- eval-rc
    if (*c_erc) {
      run.command = "eval-rc";
      const auto gold = load_relations(erc.gold);
      const auto pred = load_relations(erc.pred);
      const termex::RelationReport rep = termex::eval_relations(gold, pred);
      for (const auto& [label, m] : rep.per_label)
        std::cout << termex::to_string(label) << "  P " << fmt2(m.precision) << "  R "
                  << fmt2(m.recall) << "  F " << fmt2(m.f) << '\n';
      std::cout << "micro F " << fmt2(rep.micro_f) << '\n'
                << "macro F " << fmt2(rep.macro_f) << '\n';
      if (!erc.json_out.empty()) {
        run.inputs = {{"gold", erc.gold}, {"pred", erc.pred}};
        run.declare_output(erc.json_out);
        json per = json::object();
        for (const auto& [label, m] : rep.per_label)
          per[std::string(termex::to_string(label))] = {{"tp", m.tp},       {"fp", m.fp},
                                                        {"fn", m.fn},       {"precision", m.precision},
                                                        {"recall", m.recall}, {"f", m.f}};
        json j = {{"per_label", per},
                  {"micro_f", rep.micro_f},
                  {"macro_f", rep.macro_f},
                  {"pairs", rep.n_pairs}};
        open_output(erc.json_out) << j.dump(2) << '\n';
      }
    }

    run.write_manifest();
    return 0;
  } catch (const UsageError& e) {
    run.remove_outputs();
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    run.remove_outputs();
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const termex::ParseError& e) {
    run.remove_outputs();
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const termex::ValidityError& e) {
    run.remove_outputs();
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    run.remove_outputs();
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
