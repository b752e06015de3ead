#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wmdlab/embeddings.hpp"
#include "wmdlab/wmd.hpp"

namespace wmdlab {

struct DocPair {
  std::size_t source;
  std::size_t target;

  friend bool operator==(const DocPair&, const DocPair&) = default;
};

enum class NeighborMode { CrossSplit, LeaveOneOut };

/// For each row of `dist`, the column id with the smallest finite distance.
/// LeaveOneOut skips the column carrying the row's own id. Ties go to the
/// lower target id. Throws NoFiniteNeighbor naming the row.
std::vector<DocPair> nearest_neighbor_pairs(const DistanceMatrix& dist, NeighborMode mode);

inline constexpr double kDefaultBinWidth = 0.02;

struct TransportHistogram {
  std::vector<double> bin_edges;  // n + 1 increasing edges starting at 0
  std::vector<double> masses;     // n bins, [lo, hi) except the closed last bin
  double total_mass = 0.0;

  std::size_t bin_of(double position) const;
};

/// Deposits each plan entry's mass at its ground cost. Bins have width
/// `bin_width` and cover [0, max(2, largest cost)]. Throws InvalidInput for
/// an empty pair list or a non-positive width.
TransportHistogram transport_histogram(std::span<const DocumentMeasure> sources,
                                       std::span<const DocumentMeasure> targets,
                                       const EmbeddingStore& store,
                                       double bin_width = kDefaultBinWidth, int workers = 0);

/// As above for document pairs of `resources`, with uniform count weights.
TransportHistogram transport_histogram(const std::vector<DocPair>& pairs,
                                       const DistanceResources& resources,
                                       double bin_width = kDefaultBinWidth, int workers = 0);

/// Pearson product-moment correlation, two-pass. Throws InvalidInput for
/// mismatched lengths and DegenerateInput for fewer than two points or a
/// constant series.
double pearson(std::span<const double> xs, std::span<const double> ys);

/// `count` pairs of distinct ids drawn uniformly with replacement.
/// Throws InvalidInput for fewer than two ids.
std::vector<DocPair> sample_pairs(const std::vector<std::size_t>& ids, std::size_t count,
                                  std::uint64_t seed);

struct Scatter {
  std::vector<DocPair> pairs;
  std::vector<double> bow_l1l1;
  std::vector<double> wmd;
};

/// L1/L1 BOW and WMD (uniform count weights) for each pair. With
/// `uniform_cost` the embeddings are ignored and every pair of distinct
/// words costs 2.
Scatter wmd_bow_scatter(const std::vector<DocPair>& pairs, const DistanceResources& resources,
                        const EmbeddingStore* store, bool uniform_cost = false,
                        int workers = 0);

struct DimCorrelation {
  std::size_t dim;
  double pearson;
  std::size_t pairs;
};

struct DimComparisonOptions {
  bool uniform_cost = false;
  bool renormalize = false;  // L2-normalise the projected vectors
  int workers = 0;
};

/// Pearson(WMD, L1/L1 BOW) per target dimension on one seeded sample of
/// document pairs. Documents without usable words are never sampled. The
/// embeddings are reduced with PCA fitted on the corpus vocabulary; a
/// dimension equal to store.dim() uses the store as is. Throws InvalidInput
/// for a dimension outside [1, store.dim()].
std::vector<DimCorrelation> dim_comparison(const Corpus& corpus, const EmbeddingStore& store,
                                           const std::vector<std::size_t>& dims,
                                           std::size_t sample_pairs, std::uint64_t seed,
                                           const DimComparisonOptions& options = {});

}  // namespace wmdlab
