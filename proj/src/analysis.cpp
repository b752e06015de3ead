#include "wmdlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include <omp.h>

#include "wmdlab/error.hpp"
#include "wmdlab/numeric.hpp"
#include "wmdlab/random.hpp"

namespace wmdlab {

namespace {

int resolve_workers(int workers) { return workers > 0 ? workers : omp_get_max_threads(); }

/// Runs body(i) for i in [0, n) in parallel and rethrows the exception of
/// the lowest failing index.
template <class Body>
void parallel_for(std::size_t n, int workers, Body body) {
  std::exception_ptr error;
  std::size_t error_index = n;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_workers(workers))
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(wmdlab_analysis_error)
      if (static_cast<std::size_t>(i) < error_index) {
        error_index = static_cast<std::size_t>(i);
        error = std::current_exception();
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

struct Deposit {
  double position;
  double mass;
};

Matrix uniform_word_cost(const DocumentMeasure& a, const DocumentMeasure& b) {
  Matrix c(a.words.size(), b.words.size());
  for (std::size_t i = 0; i < a.words.size(); ++i) {
    for (std::size_t j = 0; j < b.words.size(); ++j) c(i, j) = a.words[i] == b.words[j] ? 0.0 : 2.0;
  }
  return c;
}

}  // namespace

std::vector<DocPair> nearest_neighbor_pairs(const DistanceMatrix& dist, NeighborMode mode) {
  std::vector<DocPair> out;
  out.reserve(dist.n_rows);
  for (std::size_t i = 0; i < dist.n_rows; ++i) {
    const std::size_t self = dist.row_ids[i];
    bool found = false;
    DocPair best{self, 0};
    double best_d = 0.0;
    for (std::size_t j = 0; j < dist.n_cols; ++j) {
      const double d = dist.at(i, j);
      const std::size_t target = dist.col_ids[j];
      if (!std::isfinite(d)) continue;
      if (mode == NeighborMode::LeaveOneOut && target == self) continue;
      if (!found || d < best_d || (d == best_d && target < best.target)) {
        found = true;
        best_d = d;
        best.target = target;
      }
    }
    if (!found) {
      throw Error(ErrorCode::NoFiniteNeighbor,
                  "document " + std::to_string(self) + " has no finite neighbour");
    }
    out.push_back(best);
  }
  return out;
}

std::size_t TransportHistogram::bin_of(double position) const {
  const std::size_t n = bin_edges.size() - 1;
  const double width = bin_edges[1] - bin_edges[0];
  auto idx = static_cast<std::size_t>(std::max(0.0, std::floor(position / width)));
  idx = std::min(idx, n - 1);
  while (idx + 1 < n && position >= bin_edges[idx + 1]) ++idx;
  while (idx > 0 && position < bin_edges[idx]) --idx;
  return idx;
}

namespace {

TransportHistogram bin_deposits(const std::vector<std::vector<Deposit>>& deposits,
                                double bin_width) {
  double top = 2.0;
  for (const auto& pair : deposits) {
    for (const auto& d : pair) top = std::max(top, d.position);
  }
  const double ratio = top / bin_width;
  auto n = static_cast<std::size_t>(std::ceil(ratio));
  if (std::abs(ratio - std::round(ratio)) < 1e-9) n = static_cast<std::size_t>(std::llround(ratio));
  n = std::max<std::size_t>(n, 1);
  while (static_cast<double>(n) * bin_width < top) ++n;

  TransportHistogram h;
  for (std::size_t i = 0; i <= n; ++i) h.bin_edges.push_back(static_cast<double>(i) * bin_width);
  std::vector<NeumaierSum> sums(n);
  NeumaierSum total;
  for (const auto& pair : deposits) {
    for (const auto& d : pair) {
      sums[h.bin_of(d.position)].add(d.mass);
      total.add(d.mass);
    }
  }
  for (const auto& s : sums) h.masses.push_back(s.value());
  h.total_mass = total.value();
  return h;
}

}  // namespace

TransportHistogram transport_histogram(std::span<const DocumentMeasure> sources,
                                       std::span<const DocumentMeasure> targets,
                                       const EmbeddingStore& store, double bin_width,
                                       int workers) {
  if (sources.empty()) throw Error(ErrorCode::InvalidInput, "no document pairs");
  if (sources.size() != targets.size()) {
    throw Error(ErrorCode::InvalidInput, "source and target lists differ in length");
  }
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
    throw Error(ErrorCode::InvalidInput, "bin width must be positive");
  }
  std::vector<std::vector<Deposit>> deposits(sources.size());
  parallel_for(sources.size(), workers, [&](std::size_t p) {
    const auto s = wmd_solve(sources[p], targets[p], store);
    for (const auto& e : s.plan.entries) deposits[p].push_back({s.cost(e.row, e.col), e.mass});
  });
  return bin_deposits(deposits, bin_width);
}

TransportHistogram transport_histogram(const std::vector<DocPair>& pairs,
                                       const DistanceResources& resources, double bin_width,
                                       int workers) {
  if (!resources.store()) throw Error(ErrorCode::InvalidInput, "histogram needs word embeddings");
  std::vector<DocumentMeasure> sources, targets;
  sources.reserve(pairs.size());
  targets.reserve(pairs.size());
  for (const auto& p : pairs) {
    sources.push_back(resources.measure(p.source, Weighting::UniformCount));
    targets.push_back(resources.measure(p.target, Weighting::UniformCount));
  }
  return transport_histogram(sources, targets, *resources.store(), bin_width, workers);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::InvalidInput, "series differ in length");
  if (xs.size() < 2) throw Error(ErrorCode::DegenerateInput, "need at least two points");
  const auto n = static_cast<double>(xs.size());
  NeumaierSum sx, sy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx.add(xs[i]);
    sy.add(ys[i]);
  }
  const double mx = sx.value() / n, my = sy.value() / n;
  NeumaierSum sxy, sxx, syy;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (!(sxx.value() > 0.0) || !(syy.value() > 0.0)) {
    throw Error(ErrorCode::DegenerateInput, "series has zero variance");
  }
  const double r = sxy.value() / (std::sqrt(sxx.value()) * std::sqrt(syy.value()));
  return std::clamp(r, -1.0, 1.0);
}

std::vector<DocPair> sample_pairs(const std::vector<std::size_t>& ids, std::size_t count,
                                  std::uint64_t seed) {
  if (ids.size() < 2) throw Error(ErrorCode::InvalidInput, "need at least two documents");
  std::mt19937_64 rng(seed);
  std::vector<DocPair> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto a = uniform_below(rng, ids.size());
    auto b = uniform_below(rng, ids.size() - 1);
    if (b >= a) ++b;
    out.push_back({ids[a], ids[b]});
  }
  return out;
}

Scatter wmd_bow_scatter(const std::vector<DocPair>& pairs, const DistanceResources& resources,
                        const EmbeddingStore* store, bool uniform_cost, int workers) {
  if (!uniform_cost && !store) throw Error(ErrorCode::InvalidInput, "WMD needs word embeddings");
  Scatter s;
  s.pairs = pairs;
  s.bow_l1l1.resize(pairs.size());
  s.wmd.resize(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t p) {
    const auto& pr = pairs[p];
    s.bow_l1l1[p] = vector_distance(resources.vector(pr.source, MethodKind::Bow, NormScheme::L1),
                                    resources.vector(pr.target, MethodKind::Bow, NormScheme::L1),
                                    VectorMetric::L1);
    const auto a = resources.measure(pr.source, Weighting::UniformCount);
    const auto b = resources.measure(pr.target, Weighting::UniformCount);
    s.wmd[p] = uniform_cost
                   ? solve_transport(TransportProblem{a.weights, b.weights, uniform_word_cost(a, b)})
                         .objective
                   : wmd_distance(a, b, *store);
  });
  return s;
}

std::vector<DimCorrelation> dim_comparison(const Corpus& corpus, const EmbeddingStore& store,
                                           const std::vector<std::size_t>& dims,
                                           std::size_t sample_count, std::uint64_t seed,
                                           const DimComparisonOptions& options) {
  for (auto d : dims) {
    if (d == 0 || d > store.dim()) {
      throw Error(ErrorCode::InvalidInput, "dimension " + std::to_string(d) +
                                               " outside [1, " + std::to_string(store.dim()) +
                                               "]");
    }
  }
  const DistanceResources resources(corpus, &store);
  std::vector<std::size_t> usable;
  for (const auto& doc : resources.corpus().documents) {
    if (!resources.vector(doc.id, MethodKind::Bow, NormScheme::L1).empty()) usable.push_back(doc.id);
  }
  const auto pairs = sample_pairs(usable, sample_count, seed);
  const auto& fit_vocab = resources.vocab().words();

  std::vector<DimCorrelation> out;
  for (auto d : dims) {
    Scatter s;
    if (d == store.dim()) {
      s = wmd_bow_scatter(pairs, resources, &store, options.uniform_cost, options.workers);
    } else {
      auto reduced = project_pca(store, d, fit_vocab);
      if (options.renormalize) reduced = l2_normalize(reduced);
      s = wmd_bow_scatter(pairs, resources, &reduced, options.uniform_cost, options.workers);
    }
    out.push_back({d, pearson(s.wmd, s.bow_l1l1), pairs.size()});
  }
  return out;
}

}  // namespace wmdlab
