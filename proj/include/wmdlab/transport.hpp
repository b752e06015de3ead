#pragma once

#include <cstddef>
#include <vector>

#include "wmdlab/matrix.hpp"
#include "wmdlab/sparse_vector.hpp"

namespace wmdlab {

/// Balanced discrete transportation problem: move `supply` onto `demand`
/// at minimal total cost sum_ij cost(i, j) * P(i, j).
struct TransportProblem {
  std::vector<double> supply;
  std::vector<double> demand;
  Matrix cost;  // supply.size() x demand.size()
};

struct TransportFlow {
  std::size_t row;
  std::size_t col;
  double mass;

  friend bool operator==(const TransportFlow&, const TransportFlow&) = default;
};

/// Optimal coupling in sparse form. Entries are sorted by (row, col) and
/// every mass is strictly positive; indices refer to the caller's problem,
/// not to the internally compacted one.
struct TransportPlan {
  std::vector<TransportFlow> entries;
  double objective = 0.0;
};

/// Tolerance on |sum(supply) - sum(demand)| and on plan marginals.
inline constexpr double kMarginTolerance = 1e-9;

/// Exact solver (network simplex on the bipartite transportation graph).
///
/// Zero-mass rows and columns are dropped before solving. Marginals whose
/// totals differ by at most kMarginTolerance are rescaled to balance exactly;
/// the returned plan is scaled back to the supply total.
///
/// Throws Error{InvalidInput} on negative, NaN or infinite entries and on
/// shape mismatches, Error{UnbalancedProblem} on larger imbalance.
TransportPlan solve_transport(const TransportProblem& problem);

/// Upper bound on rows * cols accepted by brute_force_transport.
inline constexpr std::size_t kBruteForceMaxCells = 36;

/// Exact LP optimum by exhaustive enumeration of the basic feasible solutions
/// of the transportation polytope. Intended as a test oracle only.
///
/// Marginals are perturbed symbolically so every basis is non-degenerate;
/// the search then walks the whole pivot graph of spanning-tree bases from
/// the northwest corner basis and returns the cheapest one visited.
///
/// Throws Error{TooLarge} when rows * cols exceeds kBruteForceMaxCells.
double brute_force_transport(const TransportProblem& problem);

/// The uniform ground cost: 0 on the diagonal and 2 elsewhere.
Matrix uniform_cost(std::size_t m);

/// OT(x, y, uniform_cost) by its closed form ||x - y||_1.
/// Both inputs must be L1-normalised; throws Error{NotNormalized} otherwise
/// and Error{DimMismatch} if the dimensions differ.
double ot_uniform(const SparseVector& x, const SparseVector& y);

}  // namespace wmdlab
