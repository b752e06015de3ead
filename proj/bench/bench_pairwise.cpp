#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include <omp.h>

#include "wmdlab/random.hpp"
#include "wmdlab/wmd.hpp"

using namespace wmdlab;

namespace {

struct Workload {
  EmbeddingStore store{64};
  std::vector<std::size_t> ids;
  std::unique_ptr<DistanceResources> resources;

  explicit Workload(std::size_t docs) {
    std::mt19937_64 rng(2024);
    const std::size_t vocab = 400;
    std::vector<double> v(64);
    for (std::size_t w = 0; w < vocab; ++w) {
      for (auto& x : v) x = uniform_unit(rng) - 0.5;
      store.add("w" + std::to_string(w), v);
    }
    store = l2_normalize(store);
    Corpus c;
    for (std::size_t i = 0; i < docs; ++i) {
      Document d{i, "c" + std::to_string(i % 4), {}};
      const auto len = 10 + uniform_below(rng, 30);
      for (std::size_t t = 0; t < len; ++t) d.tokens.push_back("w" + std::to_string(uniform_below(rng, vocab)));
      c.documents.push_back(std::move(d));
      ids.push_back(i);
    }
    c.reindex();
    resources = std::make_unique<DistanceResources>(std::move(c), &store);
  }
};

const Workload& workload() {
  static const Workload w(120);
  return w;
}

void BM_PairwiseSerial(benchmark::State& state) {
  const auto& w = workload();
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairwise_distances_serial(w.ids, w.ids, Method{}, *w.resources));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.ids.size() * w.ids.size()));
}

void BM_PairwiseParallel(benchmark::State& state) {
  const auto& w = workload();
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairwise_distances(w.ids, w.ids, Method{}, *w.resources, workers));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.ids.size() * w.ids.size()));
}

void BM_PairwiseBowParallel(benchmark::State& state) {
  const auto& w = workload();
  const Method bow{MethodKind::Bow, NormScheme::L1, VectorMetric::L1};
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairwise_distances(w.ids, w.ids, bow, *w.resources, static_cast<int>(state.range(0))));
  }
}

}  // namespace

BENCHMARK(BM_PairwiseSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairwiseParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PairwiseBowParallel)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
