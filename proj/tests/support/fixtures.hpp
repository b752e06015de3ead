#pragma once

// Seeded generators shared by the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wmdlab/sparse_vector.hpp"
#include "wmdlab/transport.hpp"

namespace wmdlab::testing {

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64{seed}; }

/// Random nonnegative weights summing to `total`. With `coarse` set, values
/// are multiples of 1/4 of the total, which produces degenerate bases.
inline std::vector<double> random_marginal(std::mt19937_64& rng, std::size_t n, double total,
                                           bool coarse, bool allow_zeros) {
  std::vector<double> w(n);
  for (;;) {
    for (auto& x : w) {
      if (coarse) {
        x = static_cast<double>(std::uniform_int_distribution<int>(allow_zeros ? 0 : 1, 4)(rng));
      } else {
        x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        if (allow_zeros && std::bernoulli_distribution(0.15)(rng)) x = 0.0;
      }
    }
    double s = 0.0;
    for (double x : w) s += x;
    if (s > 0.0) {
      for (auto& x : w) x = x / s * total;
      return w;
    }
  }
}

/// Balanced problem with 1..max_side rows and columns. Roughly a third of the
/// instances use coarse marginals and integer costs so ties and degenerate
/// pivots are exercised, not just generic data.
inline TransportProblem random_problem(std::mt19937_64& rng, std::size_t max_side) {
  std::uniform_int_distribution<std::size_t> side(1, max_side);
  const std::size_t ns = side(rng);
  const std::size_t nt = side(rng);
  const bool coarse = std::bernoulli_distribution(0.35)(rng);
  const double total = coarse ? 1.0 : std::uniform_real_distribution<double>(0.5, 3.0)(rng);
  TransportProblem p;
  p.supply = random_marginal(rng, ns, total, coarse, true);
  p.demand = random_marginal(rng, nt, total, coarse, true);
  // Renormalisation above can leave the totals a few ulps apart; that is the
  // situation balance repair exists for.
  p.cost = Matrix(ns, nt);
  for (auto& c : p.cost.data()) {
    c = coarse ? static_cast<double>(std::uniform_int_distribution<int>(0, 3)(rng))
               : std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }
  return p;
}

/// Pair of L1-normalised sparse vectors over a vocabulary of size <= max_vocab.
inline std::pair<SparseVector, SparseVector> random_normalized_pair(std::mt19937_64& rng,
                                                                    std::size_t max_vocab) {
  const std::size_t m = std::uniform_int_distribution<std::size_t>(1, max_vocab)(rng);
  auto draw = [&] {
    std::vector<double> dense(m, 0.0);
    const double density = std::uniform_real_distribution<double>(0.05, 0.6)(rng);
    for (;;) {
      for (auto& x : dense) {
        x = std::bernoulli_distribution(density)(rng)
                ? static_cast<double>(std::uniform_int_distribution<int>(1, 5)(rng))
                : 0.0;
      }
      double s = 0.0;
      for (double x : dense) s += x;
      if (s > 0.0) {
        for (auto& x : dense) x /= s;
        return SparseVector::from_dense(dense);
      }
    }
  };
  auto a = draw();
  auto b = draw();
  return {std::move(a), std::move(b)};
}

/// Transport problem on the union support of (x, y) with the uniform cost.
inline TransportProblem uniform_problem(const SparseVector& x, const SparseVector& y) {
  TransportProblem p;
  p.supply = x.to_dense();
  p.demand = y.to_dense();
  p.cost = uniform_cost(x.dim());
  return p;
}

struct MarginalError {
  double rows = 0.0;
  double cols = 0.0;
};

inline MarginalError marginal_error(const TransportProblem& p, const TransportPlan& plan) {
  std::vector<double> r(p.supply.size(), 0.0), c(p.demand.size(), 0.0);
  for (const auto& e : plan.entries) {
    r[e.row] += e.mass;
    c[e.col] += e.mass;
  }
  MarginalError err;
  for (std::size_t i = 0; i < r.size(); ++i) err.rows = std::max(err.rows, std::abs(r[i] - p.supply[i]));
  for (std::size_t j = 0; j < c.size(); ++j) err.cols = std::max(err.cols, std::abs(c[j] - p.demand[j]));
  return err;
}

/// Relative comparison with a tiny absolute floor so exact zeros compare.
inline bool within_relative(double got, double want, double tol) {
  return std::abs(got - want) <= tol * std::abs(want) + 1e-15;
}

}  // namespace wmdlab::testing
