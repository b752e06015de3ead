#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "doctest.h"
#include "json.hpp"
#include "support/fixtures.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"
#include "wmdlab/cli/commands.hpp"
#include "wmdlab/cli/config.hpp"
#include "wmdlab/error.hpp"

using namespace wmdlab;
using namespace wmdlab::cli;
using wmdlab::testing::make_rng;
using wmdlab::testing::random_corpus;
using wmdlab::testing::TempDir;
using wmdlab::testing::unit_embeddings;
using wmdlab::testing::word_name;
namespace fs = std::filesystem;

namespace {

/// Runs the CLI in process and captures its log.
struct Run {
  int code;
  std::string log;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream log;
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(log);
  auto logger = std::make_shared<spdlog::logger>("test", sink);
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  args.insert(args.begin(), "wmdlab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  const int code = run(static_cast<int>(argv.size()), argv.data());
  spdlog::set_default_logger(std::make_shared<spdlog::logger>("null"));
  return {code, log.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

/// Three-class corpus of 45 documents with one fixed fold, plus text
/// embeddings of dimension `dim` for its 40 words.
struct Fixture {
  TempDir dir;
  fs::path corpus;
  fs::path embeddings;

  explicit Fixture(std::size_t dim = 12, std::uint64_t seed = 91) {
    auto rng = make_rng(seed);
    auto c = random_corpus(rng, 45, 40, 9);
    c.name = "toy";
    c.split = SplitType::OneFold;
    Fold f;
    for (std::size_t i = 0; i < 45; ++i) (i % 3 == 0 && i < 30 ? f.test : f.train).push_back(i);
    c.folds = {f};
    corpus = dir / "toy.txt";
    write_corpus(c, corpus);
    embeddings = dir / "emb.txt";
    save_embeddings(unit_embeddings(rng, 40, dim), embeddings, EmbeddingFormat::Text);
  }

  std::vector<std::string> base(const std::string& command) const {
    return {command, "--dataset", corpus.string(), "--embeddings", embeddings.string(),
            "--format", "text", "--out", (dir / "out").string()};
  }
  fs::path out(const std::string& name) const { return dir.path() / "out" / name; }
};

std::vector<std::string> operator+(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::size_t cache_files(const fs::path& dir) {
  std::size_t n = 0;
  if (!fs::exists(dir)) return 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ".dist";
  return n;
}

}  // namespace

TEST_CASE("config file and flag precedence") {
  TempDir dir;
  const auto cfg = dir / "run.cfg";
  std::ofstream(cfg) << "# experiment\n[run]\nmethod = \"wmd,bow/l2/l1\"\nkeep_oov = true\n"
                        "seed = 7\ndims=5, 300\nclassifier = wknn\n";
  const auto s = read_config_file(cfg);
  CHECK(s.at("keep-oov") == "true");
  CHECK(s.at("method") == "wmd,bow/l2/l1");
  const auto c = make_config(s);
  REQUIRE(c.methods.size() == 2);
  CHECK(c.methods[1].tag() == "bow-l2-l1");
  CHECK(c.keep_oov);
  CHECK(c.seed == 7);
  CHECK(c.dims == std::vector<std::size_t>{5, 300});
  CHECK(c.classifier == Classifier::Wknn);

  auto over = s;
  over["seed"] = "9";
  CHECK(make_config(over).seed == 9);
  CHECK(make_config(to_settings(c)).methods == c.methods);

  std::ofstream(dir / "bad.cfg") << "method = wmd\nfrobnicate = 1\n";
  try {
    read_config_file(dir / "bad.cfg");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  Settings wrong{{"norm", "l3"}};
  try {
    make_config(wrong);
    FAIL("expected invalid input");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("--norm") != std::string::npos);
  }
  Settings bare{{"method", "bow"}, {"norm", "none"}, {"metric", "l2"}};
  CHECK(make_config(bare).methods.front().tag() == "bow-none-l2");
}

TEST_CASE("sha256") {
  CHECK(sha256_text("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  TempDir dir;
  std::ofstream(dir / "f", std::ios::binary) << "abc";
  CHECK(sha256_file(dir / "f") == sha256_text("abc"));
}

TEST_CASE("dists caches one file per fold and method") {
  Fixture fx;
  const auto args = fx.base("dists") + std::vector<std::string>{"--method", "wmd,bow"};
  auto r = run_cli(args);
  REQUIRE(r.code == 0);
  CHECK(cache_files(fx.out("cache")) == 2);
  CHECK(count(r.log, ": computing") == 2);

  r = run_cli(args);
  CHECK(r.code == 0);
  CHECK(count(r.log, "cache hit") == 2);
  CHECK(count(r.log, ": computing") == 0);

  const auto wmd_cache = fx.out("cache") / "toy-fold0-wmd.dist";
  const auto good = slurp(wmd_cache);
  std::ofstream(wmd_cache, std::ios::trunc) << "2 2\n0 1\n";
  r = run_cli(args);
  CHECK(r.code == 0);
  CHECK(count(r.log, "[warning] corrupt cache") == 1);
  CHECK(count(r.log, ": computing") == 1);
  CHECK(slurp(wmd_cache) == good);

  auto no_compute = fx.base("dists") + std::vector<std::string>{"--method", "tfidf", "--no-compute"};
  r = run_cli(no_compute);
  CHECK(r.code == 1);
  CHECK(r.log.find("--no-compute") != std::string::npos);
}

TEST_CASE("cache directory override") {
  Fixture fx;
  const auto cache = fx.dir / "elsewhere";
  ::setenv("WMDLAB_CACHE_DIR", cache.c_str(), 1);
  const auto r = run_cli(fx.base("dists") + std::vector<std::string>{"--method", "bow"});
  ::unsetenv("WMDLAB_CACHE_DIR");
  CHECK(r.code == 0);
  CHECK(cache_files(cache) == 1);
  CHECK(cache_files(fx.out("cache")) == 0);
}

TEST_CASE("eval reports") {
  Fixture fx;
  const auto args = fx.base("eval") + std::vector<std::string>{"--method", "wmd,bow,tfidf/l2/l2"};
  auto r = run_cli(args);
  REQUIRE(r.code == 0);
  const auto csv = slurp(fx.out("eval.csv"));
  CHECK(csv.rfind("dataset,method,norm,metric,classifier,k,gamma,fold,error_percent,excluded_docs\n", 0) == 0);
  CHECK(count(csv, "\n") == 4);
  CHECK(count(csv, "toy,bow-l1-l1,l1,l1,knn,") == 1);

  const auto summary = nlohmann::json::parse(slurp(fx.out("eval_summary.json")));
  CHECK(summary["rel"]["bow-l1-l1"]["value"].get<double>() == 1.0);
  CHECK(summary["results"].size() == 3);

  const auto manifest = nlohmann::json::parse(slurp(fx.out("manifest-eval.json")));
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["inputs"]["embeddings"]["sha256"] == sha256_file(fx.embeddings));
  CHECK(manifest["config"]["seed"] == "1");

  // Equal manifests, identical reports, whatever the worker count.
  const auto first_manifest = slurp(fx.out("manifest-eval.json"));
  fs::remove_all(fx.out("cache"));
  r = run_cli(args + std::vector<std::string>{"--workers", "3"});
  REQUIRE(r.code == 0);
  CHECK(slurp(fx.out("manifest-eval.json")) == first_manifest);
  CHECK(slurp(fx.out("eval.csv")) == csv);

  r = run_cli(fx.base("eval") + std::vector<std::string>{"--method", "wmd", "--classifier", "wknn"});
  CHECK(r.code == 0);
  CHECK(count(slurp(fx.out("eval.csv")), ",wknn,19,0.") == 1);
}

TEST_CASE("missing inputs name their flag") {
  Fixture fx;
  auto r = run_cli({"analyze", "--dataset", fx.corpus.string(), "--out", (fx.dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.log.find("--embeddings") != std::string::npos);

  r = run_cli({"eval", "--embeddings", fx.embeddings.string(), "--out", (fx.dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.log.find("--dataset") != std::string::npos);

  r = run_cli({"eval", "--dataset", fx.corpus.string(), "--embeddings", (fx.dir / "nope").string(),
               "--out", (fx.dir / "o").string()});
  CHECK(r.code == 1);
  CHECK(r.log.find("--embeddings") != std::string::npos);
  CHECK_FALSE(fs::exists(fx.dir / "o" / "eval.csv"));

  r = run_cli({"frobnicate"});
  CHECK(r.code != 0);
}

TEST_CASE("dedup") {
  TempDir dir;
  Corpus c;
  c.name = "dups";
  c.split = SplitType::OneFold;
  c.documents = {{0, "a", {"x", "y"}}, {1, "a", {"y", "x"}}, {2, "b", {"p", "q"}},
                 {3, "c", {"q", "p"}}, {4, "a", {"z"}}, {5, "b", {"r", "s"}}};
  c.reindex();
  c.folds = {Fold{{0, 2, 4}, {1, 3, 5}}};
  write_corpus(c, dir / "dups.txt");
  auto r = run_cli({"dedup", "--dataset", (dir / "dups.txt").string(), "--out", (dir / "out").string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "dups-duplicates.json"));
  CHECK(j["counts"]["pairs"] == 2);
  CHECK(j["counts"]["samples"] == 4);
  CHECK(j["counts"]["cross_split"] == 2);
  CHECK(j["conflicting"] == nlohmann::json::parse("[[2, 3]]"));
  const auto clean = load_corpus(dir / "out" / "dups-clean.txt");
  CHECK(clean.documents.size() == 3);
  for (const auto& d : clean.documents) CHECK(d.tokens != TokenList{"p", "q"});

  // A duplicate-free corpus is re-emitted unchanged.
  Corpus u = c;
  u.documents = {{0, "a", {"x"}}, {1, "b", {"y"}}, {2, "a", {"z", "x"}}};
  u.reindex();
  u.folds = {Fold{{0, 1}, {2}}};
  write_corpus(u, dir / "u.txt");
  r = run_cli({"dedup", "--dataset", (dir / "u.txt").string(), "--out", (dir / "out").string()});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "out" / "dups-duplicates.json"))["counts"]["pairs"] == 0);
  CHECK(slurp(dir / "out" / "dups-clean.txt") == slurp(dir / "u.txt"));
  CHECK(slurp(dir / "out" / "dups-clean.txt.fold0") == slurp(dir / "u.txt.fold0"));
}

TEST_CASE("analyze outputs") {
  TempDir dir;
  auto rng = make_rng(93);
  // Every test document repeats a train document.
  Corpus c;
  c.name = "twins";
  c.split = SplitType::OneFold;
  Fold f;
  for (std::size_t i = 0; i < 10; ++i) {
    TokenList t{word_name(i), word_name(i + 1), word_name(2 * i % 7)};
    c.documents.push_back({2 * i, "l" + std::to_string(i % 2), t});
    c.documents.push_back({2 * i + 1, "l" + std::to_string(i % 2), t});
    f.train.push_back(2 * i);
    f.test.push_back(2 * i + 1);
  }
  c.reindex();
  c.folds = {f};
  write_corpus(c, dir / "twins.txt");
  save_embeddings(unit_embeddings(rng, 12, 300), dir / "emb.txt", EmbeddingFormat::Text);
  const std::vector<std::string> args{"analyze", "--dataset", (dir / "twins.txt").string(),
                                      "--embeddings", (dir / "emb.txt").string(), "--format",
                                      "text", "--out", (dir / "out").string(), "--dims", "5,300",
                                      "--pairs", "150"};
  const auto r = run_cli(args);
  REQUIRE(r.code == 0);

  std::istringstream hist(slurp(dir / "out" / "twins-histogram.csv"));
  std::string line;
  std::getline(hist, line);
  CHECK(line == "bin_lo,bin_hi,mass");
  std::getline(hist, line);
  CHECK(line == "0,0.02,10");
  std::size_t bins = 1;
  while (std::getline(hist, line)) {
    ++bins;
    CHECK(line.substr(line.rfind(',')) == ",0");
  }
  CHECK(bins == 100);

  CHECK(count(slurp(dir / "out" / "twins-scatter.csv"), "\n") == 151);
  const auto sc = nlohmann::json::parse(slurp(dir / "out" / "twins-scatter.json"));
  CHECK(sc["pairs"] == 150);
  CHECK(std::abs(sc["pearson"].get<double>()) <= 1.0);

  std::istringstream dims(slurp(dir / "out" / "twins-dims.csv"));
  std::getline(dims, line);
  CHECK(line == "dim,pearson,pairs");
  std::string low, high;
  std::getline(dims, low);
  std::getline(dims, high);
  CHECK(low.rfind("5,", 0) == 0);
  CHECK(high.rfind("300,", 0) == 0);
  auto value = [](const std::string& row) {
    const auto a = row.find(',') + 1;
    return std::stod(row.substr(a, row.rfind(',') - a));
  };
  CHECK(value(high) >= value(low));
}

TEST_CASE("project") {
  Fixture fx(12);
  const auto r = run_cli({"project", "--embeddings", fx.embeddings.string(), "--format", "text",
                          "--dims", "3,5", "--out", (fx.dir / "out").string()});
  REQUIRE(r.code == 0);
  const auto p3 = load_embeddings(fx.out("emb-pca3.txt"), EmbeddingFormat::Text);
  CHECK(p3.dim() == 3);
  CHECK(p3.size() == 40);
  CHECK(load_embeddings(fx.out("emb-pca5.txt"), EmbeddingFormat::Text).dim() == 5);
  CHECK(run_cli({"project", "--embeddings", fx.embeddings.string(), "--format", "text", "--out",
                 (fx.dir / "out").string()})
            .code == 1);
}
