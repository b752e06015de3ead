#include <cmath>
#include <set>

#include "doctest.h"
#include "support/expect.hpp"
#include "support/fixtures.hpp"
#include "wmdlab/error.hpp"
#include "wmdlab/transport.hpp"

using namespace wmdlab;
using wmdlab::testing::code_of;
using wmdlab::testing::make_rng;
using wmdlab::testing::marginal_error;
using wmdlab::testing::within_relative;

namespace {

TransportProblem make(std::vector<double> s, std::vector<double> d, std::vector<double> c) {
  TransportProblem p;
  const auto rows = s.size(), cols = d.size();
  p.supply = std::move(s);
  p.demand = std::move(d);
  p.cost = Matrix(rows, cols, std::move(c));
  return p;
}

}  // namespace

TEST_CASE("identity problem") {
  const auto plan = solve_transport(make({1}, {1}, {0}));
  REQUIRE(plan.entries.size() == 1);
  CHECK(plan.entries[0] == TransportFlow{0, 0, 1.0});
  CHECK(plan.objective == 0.0);
}

TEST_CASE("2x2 example matches frozen oracle value") {
  const auto p = make({0.5, 0.5}, {0.25, 0.75}, {0, 1, 1, 0});
  // Frozen from brute_force_transport on this instance: 0.25.
  CHECK(brute_force_transport(p) == doctest::Approx(0.25).epsilon(1e-12));
  const auto plan = solve_transport(p);
  CHECK(plan.objective == doctest::Approx(0.25).epsilon(1e-12));
  const std::vector<TransportFlow> expected{{0, 0, 0.25}, {0, 1, 0.25}, {1, 1, 0.5}};
  REQUIRE(plan.entries.size() == expected.size());
  for (std::size_t k = 0; k < expected.size(); ++k) {
    CHECK(plan.entries[k].row == expected[k].row);
    CHECK(plan.entries[k].col == expected[k].col);
    CHECK(plan.entries[k].mass == doctest::Approx(expected[k].mass).epsilon(1e-12));
  }
}

TEST_CASE("brute force examples") {
  CHECK(brute_force_transport(make({1}, {1}, {7})) == 7.0);
  CHECK(brute_force_transport(make({0.5, 0.5}, {0.5, 0.5}, {0, 2, 2, 0})) == 0.0);
  CHECK(brute_force_transport(make({0.5, 0.5}, {0, 1}, {0, 2, 2, 0})) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("brute force refuses large instances") {
  TransportProblem p;
  p.supply.assign(7, 1.0 / 7);
  p.demand.assign(6, 1.0 / 6);
  p.cost = Matrix(7, 6, 1.0);
  CHECK(code_of([&] { brute_force_transport(p); }) == ErrorCode::TooLarge);
}

TEST_CASE("input validation") {
  CHECK(code_of([] { solve_transport(make({0.5, 0.6}, {1.0}, {0, 0})); }) ==
        ErrorCode::UnbalancedProblem);
  CHECK(code_of([] { solve_transport(make({-0.5, 1.5}, {1.0}, {0, 0})); }) ==
        ErrorCode::InvalidInput);
  CHECK(code_of([] { solve_transport(make({1.0}, {1.0}, {std::nan("")})); }) ==
        ErrorCode::InvalidInput);
  CHECK(code_of([] { solve_transport(make({1.0}, {1.0}, {-1.0})); }) == ErrorCode::InvalidInput);
  CHECK(code_of([] {
          TransportProblem p;
          p.supply = {1.0};
          p.demand = {1.0};
          p.cost = Matrix(2, 1);
          solve_transport(p);
        }) == ErrorCode::InvalidInput);
}

TEST_CASE("imbalance within tolerance is repaired") {
  const auto p = make({0.5, 0.5 + 4e-10}, {1.0}, {1.0, 3.0});
  const auto plan = solve_transport(p);
  const auto err = marginal_error(p, plan);
  CHECK(err.rows <= 1e-9);
  CHECK(err.cols <= 1e-9);
  CHECK(plan.objective == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("zero-mass rows and columns are dropped and indices preserved") {
  // Crossing assignment (1->2, 3->0) costs 0.5 * 3 + 0.5 * 2 = 2.5 vs 3.0.
  const auto p = make({0, 0.5, 0, 0.5}, {0.5, 0, 0.5}, {9, 9, 9, 1, 9, 3, 9, 9, 9, 2, 9, 5});
  const auto plan = solve_transport(p);
  CHECK(plan.objective == doctest::Approx(2.5).epsilon(1e-12));
  for (const auto& e : plan.entries) {
    CHECK((e.row == 1 || e.row == 3));
    CHECK((e.col == 0 || e.col == 2));
  }
}

TEST_CASE("ot_uniform examples and errors") {
  const auto x = SparseVector::from_dense({0.5, 0.5, 0});
  const auto y = SparseVector::from_dense({0, 0.5, 0.5});
  CHECK(ot_uniform(x, x) == 0.0);
  CHECK(ot_uniform(x, y) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(code_of([&] { ot_uniform(SparseVector::from_dense({1, 1, 0}), y); }) ==
        ErrorCode::NotNormalized);
  CHECK(code_of([&] { ot_uniform(x, SparseVector::from_dense({1.0})); }) == ErrorCode::DimMismatch);
}

TEST_CASE("property: optimality against brute force, feasibility and basis size") {
  auto rng = make_rng(0xA11CE);
  for (int trial = 0; trial < 300; ++trial) {
    const auto p = wmdlab::testing::random_problem(rng, 6);
    const auto plan = solve_transport(p);
    const double oracle = brute_force_transport(p);
    INFO("trial " << trial);
    CHECK(within_relative(plan.objective, oracle, 1e-9));
    const auto err = marginal_error(p, plan);
    CHECK(err.rows <= 1e-9);
    CHECK(err.cols <= 1e-9);
    CHECK(plan.entries.size() <= p.supply.size() + p.demand.size() - 1);
    double recomputed = 0.0;
    for (const auto& e : plan.entries) {
      CHECK(e.mass > 0.0);
      recomputed += p.cost(e.row, e.col) * e.mass;
    }
    CHECK(recomputed == doctest::Approx(plan.objective).epsilon(1e-12));
  }
}

TEST_CASE("property: uniform cost equals L1 distance with saturated diagonal") {
  auto rng = make_rng(0xB0B);
  for (int trial = 0; trial < 200; ++trial) {
    const auto [x, y] = wmdlab::testing::random_normalized_pair(rng, 20);
    const auto p = wmdlab::testing::uniform_problem(x, y);
    const auto plan = solve_transport(p);
    CHECK(std::abs(plan.objective - ot_uniform(x, y)) <= 1e-9);
    std::vector<double> diag(x.dim(), 0.0);
    for (const auto& e : plan.entries) {
      if (e.row == e.col) diag[e.row] = e.mass;
    }
    for (std::size_t i = 0; i < x.dim(); ++i) {
      CHECK(std::abs(diag[i] - std::min(p.supply[i], p.demand[i])) <= 1e-9);
    }
  }
}

TEST_CASE("property: cost scaling and transpose symmetry") {
  auto rng = make_rng(0x5CA1E);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = wmdlab::testing::random_problem(rng, 8);
    const double base = solve_transport(p).objective;

    const double lambda = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    auto scaled = p;
    for (auto& c : scaled.cost.data()) c *= lambda;
    CHECK(within_relative(solve_transport(scaled).objective, lambda * base, 1e-9));

    TransportProblem flipped{p.demand, p.supply, p.cost.transposed()};
    CHECK(within_relative(solve_transport(flipped).objective, base, 1e-9));
  }
}

TEST_CASE("larger instances stay feasible") {
  auto rng = make_rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    TransportProblem p;
    p.supply = wmdlab::testing::random_marginal(rng, 120, 1.0, false, false);
    p.demand = wmdlab::testing::random_marginal(rng, 90, 1.0, false, false);
    p.cost = Matrix(120, 90);
    for (auto& c : p.cost.data()) c = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    const auto plan = solve_transport(p);
    const auto err = marginal_error(p, plan);
    CHECK(err.rows <= 1e-9);
    CHECK(err.cols <= 1e-9);
    CHECK(plan.entries.size() <= 209);
  }
}
