#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wmdlab/sparse_vector.hpp"

namespace wmdlab {

using TokenList = std::vector<std::string>;

/// Distinct tokens of a corpus in first-occurrence order; ids are 0..m-1.
class Vocabulary {
 public:
  Vocabulary() = default;

  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::string& word(WordId id) const { return words_.at(id); }
  std::optional<WordId> lookup(std::string_view token) const;

  /// Appends `token` if unseen and returns its id.
  WordId insert(const std::string& token);

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
};

/// Throws EmptyCorpus when `documents` is empty, InvalidInput on an empty token.
Vocabulary build_vocabulary(std::span<const TokenList> documents);

struct BowVector {
  SparseVector counts;
  std::size_t dropped = 0;  // tokens absent from the vocabulary
};

BowVector bow_vector(const TokenList& doc, const Vocabulary& vocab);

/// Per-word document frequencies over a reference corpus.
struct DocumentFrequencies {
  std::vector<std::size_t> df;  // indexed by WordId
  std::size_t n_docs = 0;
};

DocumentFrequencies document_frequencies(std::span<const TokenList> documents,
                                         const Vocabulary& vocab);

/// count(w) * log2(n_docs / df(w)); words with zero weight are omitted.
/// Throws InconsistentStats for an in-vocabulary word with df == 0 and
/// InvalidInput when n_docs == 0.
SparseVector tfidf_vector(const TokenList& doc, const Vocabulary& vocab,
                          const DocumentFrequencies& stats);

enum class NormScheme { None, L1, L2 };
enum class VectorMetric { L1, L2 };

std::string_view to_string(NormScheme s) noexcept;
std::string_view to_string(VectorMetric m) noexcept;
NormScheme parse_norm(std::string_view text);
VectorMetric parse_metric(std::string_view text);

/// Throws ZeroVector when asked to L1/L2-normalise an empty vector.
SparseVector normalize(const SparseVector& v, NormScheme scheme);

/// Throws DimMismatch when dimensions differ.
double vector_distance(const SparseVector& a, const SparseVector& b, VectorMetric metric);

}  // namespace wmdlab
