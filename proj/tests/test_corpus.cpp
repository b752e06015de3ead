#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support/expect.hpp"
#include "support/tempdir.hpp"
#include "wmdlab/corpus.hpp"
#include "wmdlab/error.hpp"

using namespace wmdlab;
using wmdlab::testing::code_of;
using wmdlab::testing::TempDir;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Corpus corpus_of(const std::vector<std::pair<std::string, TokenList>>& docs) {
  Corpus c;
  c.name = "fixture";
  for (std::size_t i = 0; i < docs.size(); ++i) c.documents.push_back({i, docs[i].first, docs[i].second});
  c.reindex();
  return c;
}

EmbeddingStore store_with(std::initializer_list<std::string> words) {
  EmbeddingStore s(1);
  const std::vector<double> v{1.0};
  for (const auto& w : words) s.add(w, v);
  return s;
}

}  // namespace

TEST_CASE("loading a corpus") {
  TempDir dir;
  write_file(dir / "c.txt", "sport\tgoal match\npolitics\tvote  vote\r\n");
  const auto c = load_corpus(dir / "c.txt");
  REQUIRE(c.documents.size() == 2);
  CHECK(c.name == "c");
  CHECK(c.documents[1].id == 1);
  CHECK(c.documents[1].tokens == TokenList{"vote", "vote"});
  CHECK(c.labels() == std::vector<std::string>{"politics", "sport"});
  CHECK(c.folds.empty());

  write_file(dir / "bad.txt", "a\tx\nno tab here\n");
  try {
    load_corpus(dir / "bad.txt");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  write_file(dir / "empty_label.txt", "\tx\n");
  CHECK(code_of([&] { load_corpus(dir / "empty_label.txt"); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { load_corpus(dir / "nope.txt"); }) == ErrorCode::Io);
}

TEST_CASE("meta and fold files") {
  TempDir dir;
  write_file(dir / "d.txt", "a\tx\nb\ty\na\tz\nb\tw\n");
  write_file(dir / "d.txt.meta", "name=demo\nsplit=five-fold\n");
  CHECK(code_of([&] { load_corpus(dir / "d.txt"); }) == ErrorCode::MissingFoldFile);

  for (int k = 0; k < 5; ++k) write_file(dir / ("d.txt.fold" + std::to_string(k)), "train: 3 0 1\ntest: 2\n");
  const auto c = load_corpus(dir / "d.txt");
  CHECK(c.name == "demo");
  CHECK(c.split == SplitType::FiveFold);
  REQUIRE(c.folds.size() == 5);
  CHECK(c.folds[4].train == std::vector<std::size_t>{0, 1, 3});

  write_file(dir / "d.txt.fold2", "train: 0 1\ntest: 1 2\n");
  CHECK(code_of([&] { load_corpus(dir / "d.txt"); }) == ErrorCode::ParseError);
  write_file(dir / "d.txt.fold2", "train: 0 9\ntest: 2\n");
  CHECK(code_of([&] { load_corpus(dir / "d.txt"); }) == ErrorCode::ParseError);
}

TEST_CASE("write and reload round trip renumbers ids") {
  TempDir dir;
  auto c = corpus_of({{"a", {"x", "y"}}, {"b", {"z"}}, {"a", {}}});
  c.folds.push_back({{0, 2}, {1}});
  auto d = deduplicate(c, find_duplicates(c)).corpus;
  d.documents.erase(d.documents.begin());
  d.folds[0].train = {2};
  d.reindex();
  write_corpus(d, dir / "o.txt");
  CHECK(read_file(dir / "o.txt") == "b\tz\na\t\n");
  CHECK(read_file(dir / "o.txt.fold0") == "train: 1\ntest: 0\n");
  const auto back = load_corpus(dir / "o.txt");
  CHECK(back.name == "fixture");
  CHECK(back.documents.size() == 2);
  CHECK(back.documents[1].tokens.empty());
}

TEST_CASE("vocabulary filtering") {
  const auto c = corpus_of({{"l", {"a", "zzz"}}, {"l", {"the", "game"}}});
  const auto store = store_with({"a", "the", "game"});
  auto f = filter_vocabulary(c, &store, nullptr, false);
  CHECK(f.documents[0].tokens == TokenList{"a"});

  const std::unordered_set<std::string> stop{"the"};
  f = filter_vocabulary(c, nullptr, &stop, true);
  CHECK(f.documents[0].tokens == TokenList{"a", "zzz"});
  CHECK(f.documents[1].tokens == TokenList{"game"});

  f = filter_vocabulary(c, nullptr, nullptr, true);
  for (std::size_t i = 0; i < c.documents.size(); ++i) CHECK(f.documents[i].tokens == c.documents[i].tokens);

  const auto empty = filter_vocabulary(corpus_of({{"l", {"q"}}}), &store, nullptr, false);
  CHECK(empty.documents.size() == 1);
  CHECK(empty.documents[0].tokens.empty());
  CHECK(code_of([&] { filter_vocabulary(c, nullptr, nullptr, false); }) == ErrorCode::InvalidInput);
}

TEST_CASE("duplicate detection") {
  auto c = corpus_of({{"a", {"x", "y"}}, {"a", {"y", "x"}}, {"b", {"z"}}});
  auto r = find_duplicates(c);
  CHECK(r.pairs == std::vector<IdPair>{{0, 1}});
  CHECK(r.samples == std::vector<std::size_t>{0, 1});
  CHECK(r.conflicting.empty());

  CHECK(find_duplicates(corpus_of({{"a", {"x"}}, {"a", {"y"}}})).pairs.empty());
  CHECK(find_duplicates(corpus_of({{"a", {"x"}}, {"a", {"x", "x"}}})).pairs.empty());

  c = corpus_of({{"a", {"k"}}, {"b", {"k"}}, {"a", {"k"}}, {"a", {"m"}}});
  c.folds.push_back({{0, 3}, {1, 2}});
  r = find_duplicates(c);
  CHECK(r.pairs == std::vector<IdPair>{{0, 1}, {0, 2}, {1, 2}});
  CHECK(r.cross_split == std::vector<IdPair>{{0, 1}, {0, 2}});
  CHECK(r.conflicting == std::vector<IdPair>{{0, 1}, {1, 2}});
  CHECK(r.classes.size() == 1);
}

TEST_CASE("deduplication rules") {
  // Class {3, 7}: keep 3 drop 7 when neither is favoured by the folds.
  auto c = corpus_of({{"a", {"p"}}, {"a", {"q"}}, {"a", {"r"}}, {"a", {"k"}}, {"a", {"s"}},
                 {"a", {"t"}}, {"a", {"u"}}, {"a", {"k"}}});
  auto res = deduplicate(c, find_duplicates(c));
  REQUIRE(res.removals.size() == 1);
  CHECK(res.removals[0].id == 7);
  CHECK(res.removals[0].kept == 3);
  CHECK_FALSE(res.corpus.contains(7));

  const auto clean = corpus_of({{"a", {"x"}}, {"b", {"y"}}});
  res = deduplicate(clean, find_duplicates(clean));
  CHECK(res.removals.empty());
  CHECK(res.corpus.documents.size() == 2);

  // Cross-split class: the training copy survives even with the larger id.
  c = corpus_of({{"a", {"k"}}, {"a", {"k"}}, {"b", {"z"}}});
  c.folds.push_back({{1, 2}, {0}});
  res = deduplicate(c, find_duplicates(c));
  REQUIRE(res.removals.size() == 1);
  CHECK(res.removals[0].id == 0);
  CHECK(res.corpus.folds[0].test.empty());
  CHECK(res.corpus.folds[0].train == std::vector<std::size_t>{1, 2});

  // Conflicting labels across the split: both removed in clean mode.
  c = corpus_of({{"a", {"k"}}, {"b", {"k"}}, {"b", {"z"}}});
  c.folds.push_back({{0, 2}, {1}});
  res = deduplicate(c, find_duplicates(c));
  CHECK(res.removals.size() == 2);
  CHECK(res.corpus.documents.size() == 1);
  res = deduplicate(c, find_duplicates(c), false);
  CHECK(res.removals.size() == 1);
  CHECK(res.removals[0].id == 1);
}

TEST_CASE("property: dedup is idempotent and pairs form equivalence classes") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    Corpus c;
    const std::size_t n = 20 + t;
    for (std::size_t i = 0; i < n; ++i) {
      TokenList toks;
      const int len = 1 + static_cast<int>(rng() % 3);
      for (int k = 0; k < len; ++k) toks.push_back(std::string(1, static_cast<char>('a' + rng() % 3)));
      c.documents.push_back({i, rng() % 4 == 0 ? "x" : "y", toks});
    }
    c.reindex();
    c = make_folds(c, 2, 0.6, t);
    const auto r = find_duplicates(c);
    std::size_t expected = 0;
    for (const auto& cls : r.classes) expected += cls.size() * (cls.size() - 1) / 2;
    CHECK(r.pairs.size() == expected);
    std::set<IdPair> set(r.pairs.begin(), r.pairs.end());
    for (const auto& [a, b] : r.pairs)
      for (const auto& [c2, d] : r.pairs)
        if (b == c2) CHECK(set.count({a, d}) == 1);

    const auto once = deduplicate(c, r).corpus;
    CHECK(find_duplicates(once).pairs.empty());
    const auto twice = deduplicate(once, find_duplicates(once));
    CHECK(twice.removals.empty());
    CHECK(twice.corpus.documents.size() == once.documents.size());
  }
}

TEST_CASE("fold generation") {
  Corpus c;
  for (std::size_t i = 0; i < 10; ++i) c.documents.push_back({i, "l", {"w"}});
  c.reindex();
  const auto one = make_folds(c, 1, 0.7, 42);
  REQUIRE(one.folds.size() == 1);
  CHECK(one.split == SplitType::OneFold);
  CHECK(one.folds[0].train.size() == 7);
  CHECK(one.folds[0].test.size() == 3);
  const auto again = make_folds(c, 1, 0.7, 42);
  CHECK(again.folds[0].train == one.folds[0].train);
  CHECK(make_folds(c, 1, 0.7, 43).folds[0].train != one.folds[0].train);

  Corpus big;
  for (std::size_t i = 0; i < 737; ++i) big.documents.push_back({i, "l", {"w"}});
  big.reindex();
  const auto five = make_folds(big, 5, 517.0 / 737.0, 1);
  CHECK(five.split == SplitType::FiveFold);
  for (const auto& f : five.folds) {
    CHECK(f.train.size() == 517);
    CHECK(f.test.size() == 220);
    std::vector<std::size_t> both;
    std::set_intersection(f.train.begin(), f.train.end(), f.test.begin(), f.test.end(),
                          std::back_inserter(both));
    CHECK(both.empty());
  }
  CHECK(five.folds[0].train != five.folds[1].train);

  Corpus tiny;
  tiny.documents.push_back({0, "l", {"w"}});
  tiny.reindex();
  CHECK(code_of([&] { make_folds(tiny, 1, 0.7, 1); }) == ErrorCode::TooSmall);
  CHECK(code_of([&] { make_folds(c, 0, 0.7, 1); }) == ErrorCode::InvalidInput);
  CHECK(code_of([&] { make_folds(c, 1, 1.0, 1); }) == ErrorCode::InvalidInput);
}

TEST_CASE("stopword files") {
  TempDir dir;
  write_file(dir / "s.txt", "the\n\na\r\n");
  const auto s = load_stopwords(dir / "s.txt");
  CHECK(s.size() == 2);
  CHECK(s.count("a") == 1);
}
