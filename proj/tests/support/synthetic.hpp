#pragma once

// Synthetic corpora and embeddings for the distance and analysis suites.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "wmdlab/corpus.hpp"
#include "wmdlab/embeddings.hpp"

namespace wmdlab::testing {

inline std::string word_name(std::size_t i) { return "w" + std::to_string(i); }

/// `words` Gaussian vectors of dimension `dim`, L2-normalised.
inline EmbeddingStore unit_embeddings(std::mt19937_64& rng, std::size_t words, std::size_t dim) {
  EmbeddingStore s(dim);
  std::normal_distribution<double> g;
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < words; ++i) {
    for (auto& x : v) x = g(rng);
    s.add(word_name(i), v);
  }
  return l2_normalize(s);
}

/// Word i embedded as sqrt(2) e_i: every pair of distinct words is 2 apart.
inline EmbeddingStore one_hot_embeddings(std::size_t words) {
  EmbeddingStore s(words);
  std::vector<double> v(words, 0.0);
  for (std::size_t i = 0; i < words; ++i) {
    v.assign(words, 0.0);
    v[i] = std::sqrt(2.0);
    s.add(word_name(i), v);
  }
  return s;
}

/// Documents of 3..max_len tokens drawn uniformly from a `vocab`-word
/// vocabulary, labelled cyclically with `classes` labels.
inline Corpus random_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t vocab,
                            std::size_t max_len, std::size_t classes = 3) {
  Corpus c;
  c.name = "synthetic";
  std::uniform_int_distribution<std::size_t> len(3, max_len), word(0, vocab - 1);
  for (std::size_t i = 0; i < docs; ++i) {
    Document d;
    d.id = i;
    d.label = "c" + std::to_string(i % classes);
    const std::size_t n = len(rng);
    for (std::size_t k = 0; k < n; ++k) d.tokens.push_back(word_name(word(rng)));
    c.documents.push_back(std::move(d));
  }
  c.reindex();
  return c;
}

inline std::vector<std::size_t> all_ids(const Corpus& c) {
  std::vector<std::size_t> ids;
  for (const auto& d : c.documents) ids.push_back(d.id);
  return ids;
}

}  // namespace wmdlab::testing
