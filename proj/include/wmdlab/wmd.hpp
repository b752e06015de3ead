#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "wmdlab/corpus.hpp"
#include "wmdlab/embeddings.hpp"
#include "wmdlab/textrep.hpp"
#include "wmdlab/transport.hpp"

namespace wmdlab {

enum class Weighting { UniformCount, TfIdf };

/// Normalised word distribution of one document.
struct DocumentMeasure {
  std::vector<std::string> words;  // unique, vocabulary order
  std::vector<double> weights;     // positive, sum to 1
};

/// Throws EmptySupport when no in-vocabulary word has positive weight, and
/// InvalidInput when TfIdf is requested without statistics.
DocumentMeasure make_measure(const TokenList& doc, Weighting weighting, const Vocabulary& vocab,
                             const DocumentFrequencies* stats = nullptr);

/// Optimal transport between the two measures with Euclidean embedding
/// costs, solved on the supports only.
double wmd_distance(const DocumentMeasure& a, const DocumentMeasure& b,
                    const EmbeddingStore& store);

struct WmdSolution {
  Matrix cost;  // a.words x b.words
  TransportPlan plan;
};

WmdSolution wmd_solve(const DocumentMeasure& a, const DocumentMeasure& b,
                      const EmbeddingStore& store);

enum class MethodKind { Wmd, WmdTfidf, Bow, Tfidf };

struct Method {
  MethodKind kind = MethodKind::Wmd;
  NormScheme norm = NormScheme::L1;        // Bow and Tfidf only
  VectorMetric metric = VectorMetric::L1;  // Bow and Tfidf only

  bool uses_embeddings() const noexcept {
    return kind == MethodKind::Wmd || kind == MethodKind::WmdTfidf;
  }
  /// File-name safe identifier: wmd, wmd-tfidf, bow-l1-l1, tfidf-none-l2, ...
  std::string tag() const;
  /// Table-style label: WMD, WMD-TF-IDF, BOW (L1/L1), TF-IDF (None/L2), ...
  std::string label() const;

  /// Accepts a tag, `bow/l1/l1` style triples, or a bare `bow`/`tfidf` that
  /// takes the given defaults. Throws InvalidInput.
  static Method parse(std::string_view text, NormScheme default_norm = NormScheme::L1,
                      VectorMetric default_metric = VectorMetric::L1);

  friend bool operator==(const Method&, const Method&) = default;
};

inline constexpr double kUnusable = std::numeric_limits<double>::infinity();

/// Row-major query x reference distances. Unusable documents hold +inf.
struct DistanceMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;
  std::vector<std::size_t> row_ids;
  std::vector<std::size_t> col_ids;

  double at(std::size_t i, std::size_t j) const { return values[i * n_cols + j]; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * n_cols, n_cols}; }

  /// Cells for the given ids, in the given order. Throws InvalidInput for an
  /// id that is not a row or column of this matrix.
  DistanceMatrix select(const std::vector<std::size_t>& rows,
                        const std::vector<std::size_t>& cols) const;

  friend bool operator==(const DistanceMatrix&, const DistanceMatrix&) = default;
};

/// Cache format: `n_rows n_cols`, row ids, col ids, then one line per row
/// with 17 significant digits and `inf` for unusable cells.
void write_distance_matrix(const DistanceMatrix& m, const std::filesystem::path& path);
/// Throws Io or ParseError.
DistanceMatrix read_distance_matrix(const std::filesystem::path& path);

/// Shared read-only inputs for batch distance computation: the corpus, its
/// vocabulary and document frequencies over all its documents, and the
/// embeddings (needed by the WMD methods only).
class DistanceResources {
 public:
  DistanceResources(Corpus corpus, const EmbeddingStore* store);

  const Corpus& corpus() const noexcept { return corpus_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  const DocumentFrequencies& stats() const noexcept { return stats_; }
  const EmbeddingStore* store() const noexcept { return store_; }

  DocumentMeasure measure(std::size_t id, Weighting weighting) const;
  /// Empty when the document has no usable words.
  SparseVector vector(std::size_t id, MethodKind kind, NormScheme norm) const;

 private:
  Corpus corpus_;
  Vocabulary vocab_;
  DocumentFrequencies stats_;
  const EmbeddingStore* store_;
};

struct PairwiseResult {
  DistanceMatrix matrix;
  std::vector<std::size_t> unusable;  // sorted ids with no usable words
};

/// Parallel over rows; each unordered pair is solved once and mirrored when
/// both orientations are requested. `workers` = 0 uses the OpenMP default.
/// Results do not depend on the worker count.
PairwiseResult pairwise_distances(const std::vector<std::size_t>& queries,
                                  const std::vector<std::size_t>& refs, const Method& method,
                                  const DistanceResources& resources, int workers = 0);

/// Single-threaded reference that evaluates every cell independently.
PairwiseResult pairwise_distances_serial(const std::vector<std::size_t>& queries,
                                         const std::vector<std::size_t>& refs,
                                         const Method& method,
                                         const DistanceResources& resources);

}  // namespace wmdlab
