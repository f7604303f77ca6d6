#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::string termex_bin() {
  const char* p = std::getenv("TERMEX_BIN");
  REQUIRE(p != nullptr);
  return p;
}

struct CmdResult {
  int exit_code = -1;
  std::string output;
};

CmdResult run_cmd(const std::string& args) {
  const std::string cmd = termex_bin() + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("termex_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }
  std::string out(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallBio =
    "# doc_id = a\n"
    "метод\tB-TERM\n"
    "опорных\tI-TERM\n"
    "векторов\tI-TERM\n"
    "решает\tO\n"
    "задачу\tB-TERM\n"
    "\n"
    "анализ\tB-TERM\n"
    "текстов\tI-TERM\n"
    "работает\tO\n"
    "\n";

const char* kSmallRel =
    "{\"doc_id\":\"a\",\"sent\":0,\"arg1\":[0,3],\"arg2\":[4,5],\"label\":\"USAGE\"}\n"
    "{\"doc_id\":\"a\",\"sent\":1,\"arg1\":[0,2],\"arg2\":[0,2],\"label\":\"ISA\"}\n";

}  // namespace

TEST_CASE("cli stats prints the corpus table") {
  TempDir tmp;
  const std::string bio = tmp.file("c.bio", kSmallBio);
  const auto r = run_cmd("stats --bio " + bio);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("documents      1") != std::string::npos);
  CHECK(r.output.find("tokens         8") != std::string::npos);
  CHECK(r.output.find("terms          3") != std::string::npos);
  CHECK(r.output.find("mean_term_len  2.00") != std::string::npos);
}

TEST_CASE("cli stats validates relation files against the corpus") {
  TempDir tmp;
  const std::string bio = tmp.file("c.bio", kSmallBio);
  const std::string bad =
      tmp.file("bad.jsonl",
               "{\"doc_id\":\"a\",\"sent\":0,\"arg1\":[0,3],\"arg2\":[4,9],\"label\":\"USAGE\"}\n");
  const auto r = run_cmd("stats --bio " + bio + " --rel " + bad);
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli relations overlapping arguments are a data error") {
  TempDir tmp;
  const std::string bio = tmp.file("c.bio", kSmallBio);
  const std::string rel = tmp.file("r.jsonl", kSmallRel);
  const auto r = run_cmd("stats --bio " + bio + " --rel " + rel);
  // second line has arg1 == arg2
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("overlap") != std::string::npos);
}

TEST_CASE("cli tokenize then annotate-dict then eval-er") {
  TempDir tmp;
  const std::string text = tmp.file("doc1.txt", "Метод опорных векторов решает задачу.");
  const std::string dict = tmp.file("dict.txt", "метод опорных векторов\nзадачу\n");
  const std::string tok_bio = tmp.out("tok.bio");
  const std::string pred_bio = tmp.out("pred.bio");

  CHECK(run_cmd("tokenize --in " + text + " --out " + tok_bio).exit_code == 0);
  CHECK(run_cmd("annotate-dict --dict " + dict + " --in " + tok_bio + " --out " + pred_bio)
            .exit_code == 0);

  const std::string pred = slurp(pred_bio);
  CHECK(pred.find("Метод\tB-TERM") != std::string::npos);
  CHECK(pred.find("векторов\tI-TERM") != std::string::npos);

  const auto eval = run_cmd("eval-er --gold " + pred_bio + " --pred " + pred_bio + " --mode both");
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("exact  P 1.00  R 1.00  F 1.00") != std::string::npos);
  CHECK(eval.output.find("fuzzy  P 1.00  R 1.00  F 1.00") != std::string::npos);
}

TEST_CASE("cli rake rejects --optimized without verb resources") {
  TempDir tmp;
  const std::string bio = tmp.file("c.bio", kSmallBio);
  const auto r = run_cmd("rake --in " + bio + " --out " + tmp.out("p.bio") + " --optimized");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("usage error") != std::string::npos);
  CHECK_FALSE(fs::exists(tmp.out("p.bio")));
}

TEST_CASE("cli rake runs are byte-identical") {
  TempDir tmp;
  const std::string bio = tmp.file("c.bio", kSmallBio);
  const std::string sw = tmp.file("sw.txt", "решает\nработает\n");

  const std::string out1 = tmp.out("p1.bio"), out2 = tmp.out("p2.bio");
  const std::string ph1 = tmp.out("ph1.tsv"), ph2 = tmp.out("ph2.tsv");
  CHECK(run_cmd("rake --in " + bio + " --stopwords " + sw + " --out " + out1 +
                " --phrases " + ph1 + " --top-fraction 1.0")
            .exit_code == 0);
  CHECK(run_cmd("rake --in " + bio + " --stopwords " + sw + " --out " + out2 +
                " --phrases " + ph2 + " --top-fraction 1.0")
            .exit_code == 0);
  CHECK(slurp(out1) == slurp(out2));
  CHECK(slurp(ph1) == slurp(ph2));
  CHECK(slurp(ph1).find('\t') != std::string::npos);
}

TEST_CASE("cli writes a run manifest next to outputs") {
  TempDir tmp;
  const std::string bio = tmp.file("c.bio", kSmallBio);
  const std::string out = tmp.out("cands.tsv");
  CHECK(run_cmd("mine-dict --bio " + bio + " --out " + out).exit_code == 0);
  REQUIRE(fs::exists(tmp.path / "run.json"));
  const std::string manifest = slurp((tmp.path / "run.json").string());
  CHECK(manifest.find("\"command\": \"mine-dict\"") != std::string::npos);
  CHECK(manifest.find("config_hash") != std::string::npos);
  CHECK(manifest.find("wall_time_s") != std::string::npos);
}

TEST_CASE("cli train-crf is deterministic and tag round-trips") {
  TempDir tmp;
  std::string big;
  for (int d = 0; d < 6; ++d) {
    big += "# doc_id = d" + std::to_string(d) + "\n";
    for (int s = 0; s < 4; ++s)
      big +=
          "метод\tB-TERM\nопорных\tI-TERM\nвекторов\tI-TERM\nрешает\tO\nзадачу\tB-TERM\n\n";
  }
  const std::string bio = tmp.file("train.bio", big);

  const std::string m1 = tmp.out("m1.json"), m2 = tmp.out("m2.json");
  CHECK(run_cmd("train-crf --train " + bio + " --epochs 3 --seed 21 --out " + m1).exit_code == 0);
  CHECK(run_cmd("train-crf --train " + bio + " --epochs 3 --seed 21 --out " + m2).exit_code == 0);
  CHECK(slurp(m1) == slurp(m2));

  const std::string tagged = tmp.out("tagged.bio");
  CHECK(run_cmd("tag --model " + m1 + " --in " + bio + " --out " + tagged).exit_code == 0);
  CHECK(slurp(tagged) == big);  // separable toy corpus: tags reproduced exactly
}

TEST_CASE("cli train-rc predict-rc eval-rc round trip") {
  TempDir tmp;
  std::string bio_text, rel_text;
  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"порождает", "CAUSE"}, {"сравнимо", "COMPARE"}, {"является", "ISA"},
      {"входит", "PARTOF"},   {"синоним", "SYNONYMS"}, {"служит", "USAGE"}};
  int d = 0;
  for (int rep = 0; rep < 4; ++rep)
    for (const auto& [verb, label] : verbs) {
      bio_text += "# doc_id = d" + std::to_string(d) + "\n";
      bio_text += "система\tB-TERM\n" + verb + "\tO\nмодель\tB-TERM\n\n";
      rel_text += "{\"doc_id\":\"d" + std::to_string(d) +
                  "\",\"sent\":0,\"arg1\":[0,1],\"arg2\":[2,3],\"label\":\"" + label + "\"}\n";
      ++d;
    }
  const std::string bio = tmp.file("rc.bio", bio_text);
  const std::string rel = tmp.file("rc.jsonl", rel_text);

  const std::string model = tmp.out("rc.json");
  CHECK(run_cmd("train-rc --bio " + bio + " --rel " + rel + " --epochs 60 --out " + model)
            .exit_code == 0);

  const std::string pred = tmp.out("pred.jsonl");
  CHECK(run_cmd("predict-rc --model " + model + " --bio " + bio + " --rel " + rel + " --out " +
                pred)
            .exit_code == 0);

  const auto eval = run_cmd("eval-rc --gold " + rel + " --pred " + pred);
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("micro F 1.00") != std::string::npos);
}

TEST_CASE("cli import-dict reports entries and writes provenance") {
  TempDir tmp;
  const std::string in = tmp.file("terms.txt", "База Данных\nбаза данных\nPython\n");
  const std::string out = tmp.out("dict.txt");
  const std::string prov = tmp.out("dict.prov.json");
  const auto r = run_cmd("import-dict --in " + in + " --out " + out + " --provenance " + prov);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("entries 2") != std::string::npos);
  CHECK(slurp(out) == "python\nбаза данных\n");
  CHECK(slurp(prov).find("imported") != std::string::npos);
}

TEST_CASE("cli failure removes partial outputs") {
  TempDir tmp;
  const std::string bio = tmp.file("c.bio", kSmallBio);
  const std::string empty_dict = tmp.file("empty.txt", "\n");
  const std::string out = tmp.out("never.bio");
  const auto r = run_cmd("annotate-dict --dict " + empty_dict + " --in " + bio + " --out " + out);
  CHECK(r.exit_code == 2);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("cli rejects unknown subcommands and missing files") {
  CHECK(run_cmd("frobnicate").exit_code == 1);
  TempDir tmp;
  const auto r = run_cmd("stats --bio " + tmp.out("missing.bio"));
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli config file supplies defaults, flags win") {
  TempDir tmp;
  const std::string bio = tmp.file("c.bio", kSmallBio);
  const std::string cfg = tmp.file("cfg.json", "{\"mine-dict.max-n\": 2}");

  const std::string out1 = tmp.out("c1.tsv");
  CHECK(run_cmd("mine-dict --bio " + bio + " --out " + out1 + " --config " + cfg).exit_code == 0);
  // only bigrams present: no candidate line with three spaces-separated tokens
  std::istringstream lines(slurp(out1));
  std::string line;
  while (std::getline(lines, line)) {
    const std::string ngram = line.substr(line.rfind('\t') + 1);
    CHECK(std::count(ngram.begin(), ngram.end(), ' ') == 1);
  }
}

TEST_CASE("cli sorted Cyrillic is handled in lowercase output") {
  TempDir tmp;
  const std::string text = tmp.file("doc.txt", "Анализ Текстов и БД.");
  const std::string out = tmp.out("t.bio");
  CHECK(run_cmd("tokenize --in " + text + " --out " + out).exit_code == 0);
  const std::string bio = slurp(out);
  CHECK(bio.find("Анализ\tO") != std::string::npos);
  CHECK(bio.find("БД\tO") != std::string::npos);
}

TEST_CASE("cli tag works on raw text via --text") {
  TempDir tmp;
  std::string train;
  for (int d = 0; d < 4; ++d) {
    train += "# doc_id = d" + std::to_string(d) + "\n";
    train += "анализ\tB-TERM\nтекстов\tI-TERM\nидет\tO\n\n";
  }
  const std::string bio = tmp.file("train.bio", train);
  const std::string model = tmp.out("m.json");
  REQUIRE(run_cmd("train-crf --train " + bio + " --epochs 4 --out " + model).exit_code == 0);

  const std::string text = tmp.file("raw.txt", "Анализ текстов идет.");
  const std::string out = tmp.out("tagged.bio");
  REQUIRE(run_cmd("tag --model " + model + " --in " + text + " --text --out " + out).exit_code ==
          0);
  const std::string tagged = slurp(out);
  CHECK(tagged.find("# doc_id = raw") != std::string::npos);
  CHECK(tagged.find("Анализ\tB-TERM") != std::string::npos);
  CHECK(tagged.find("текстов\tI-TERM") != std::string::npos);
}

TEST_CASE("cli auto-annotate consumes a directory of raw text") {
  TempDir tmp;
  fs::create_directories(tmp.path / "docs");
  std::ofstream(tmp.path / "docs" / "x1.txt") << "База данных растет.";
  std::ofstream(tmp.path / "docs" / "x2.txt") << "Никаких совпадений здесь.";
  const std::string dict = tmp.file("dict.txt", "база данных\n");
  const std::string out = tmp.out("auto.bio");
  const auto r =
      run_cmd("auto-annotate --dict " + dict + " --in " + (tmp.path / "docs").string() +
              " --out " + out);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("terms 1") != std::string::npos);
  const std::string bio = slurp(out);
  CHECK(bio.find("# doc_id = x1") != std::string::npos);
  CHECK(bio.find("# doc_id = x2") != std::string::npos);
  CHECK(bio.find("База\tB-TERM") != std::string::npos);
}

TEST_CASE("cli --quiet suppresses informational lines") {
  TempDir tmp;
  const std::string bio = tmp.file("c.bio", kSmallBio);
  const std::string out = tmp.out("cands.tsv");
  const auto loud = run_cmd("mine-dict --bio " + bio + " --out " + out);
  CHECK(loud.output.find("candidates") != std::string::npos);
  const auto hushed = run_cmd("mine-dict --bio " + bio + " --out " + tmp.out("c2.tsv") +
                              " --quiet");
  CHECK(hushed.exit_code == 0);
  CHECK(hushed.output.empty());
}

TEST_CASE("cli train-crf validates the dev path before training") {
  TempDir tmp;
  const std::string bio = tmp.file("t.bio", kSmallBio);
  const auto r = run_cmd("train-crf --train " + bio + " --dev " + tmp.out("missing.bio") +
                         " --epochs 1 --out " + tmp.out("m.json"));
  CHECK(r.exit_code == 2);
  CHECK_FALSE(fs::exists(tmp.out("m.json")));
}
