#include "wmdlab/transport.hpp"

#include <algorithm>
#include <cfloat>
#include <cstdint>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "wmdlab/error.hpp"
#include "wmdlab/numeric.hpp"

namespace wmdlab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_vector(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) {
      throw Error(ErrorCode::InvalidInput, std::string(what) + " entries must be finite and >= 0");
    }
  }
}

/// The nonzero-mass part of a problem, rescaled to unit totals.
struct CompactProblem {
  std::vector<std::size_t> rows;  // compact -> original row
  std::vector<std::size_t> cols;  // compact -> original col
  std::vector<double> supply;     // sums to 1
  std::vector<double> demand;     // sums to 1
  double mass = 0.0;              // original supply total
};

CompactProblem compact(const TransportProblem& p) {
  if (p.cost.rows() != p.supply.size() || p.cost.cols() != p.demand.size()) {
    throw Error(ErrorCode::InvalidInput, "cost matrix shape does not match marginals");
  }
  if (p.supply.empty() || p.demand.empty()) {
    throw Error(ErrorCode::InvalidInput, "transport problem needs at least one row and column");
  }
  validate_vector(p.supply, "supply");
  validate_vector(p.demand, "demand");
  validate_vector(p.cost.data(), "cost");

  const double s_total = neumaier_sum(p.supply);
  const double d_total = neumaier_sum(p.demand);
  if (std::abs(s_total - d_total) > kMarginTolerance) {
    throw Error(ErrorCode::UnbalancedProblem,
                "supply total " + std::to_string(s_total) + " != demand total " +
                    std::to_string(d_total));
  }

  CompactProblem c;
  c.mass = s_total;
  if (s_total == 0.0 || d_total == 0.0) return c;
  for (std::size_t i = 0; i < p.supply.size(); ++i) {
    if (p.supply[i] > 0.0) {
      c.rows.push_back(i);
      c.supply.push_back(p.supply[i] / s_total);
    }
  }
  for (std::size_t j = 0; j < p.demand.size(); ++j) {
    if (p.demand[j] > 0.0) {
      c.cols.push_back(j);
      c.demand.push_back(p.demand[j] / d_total);
    }
  }
  return c;
}

/// Network simplex for the uncapacitated bipartite transportation problem.
///
/// Node layout: sources 0..ns-1, sinks ns..ns+nt-1, artificial root last.
/// Real arc a = i * nt + j runs from source i to sink j. The initial basis
/// is the artificial star around the root; artificial arcs never re-enter.
///
/// Artificial arcs into sinks carry a symbolic big-M cost, so each potential
/// is (k * M + r) with k in {0, 1}. Comparing reduced costs
/// lexicographically on (k-difference, remainder) is exactly big-M with
/// M -> infinity and keeps the remainders on the scale of the real costs.
class NetworkSimplex {
 public:
  NetworkSimplex(const CompactProblem& p, const Matrix& cost)
      : ns_(static_cast<int>(p.supply.size())),
        nt_(static_cast<int>(p.demand.size())),
        node_num_(ns_ + nt_),
        root_(node_num_),
        arc_num_(ns_ * nt_),
        source_(arc_num_ + node_num_),
        target_(arc_num_ + node_num_),
        cost_(arc_num_ + node_num_, 0.0),
        flow_(arc_num_ + node_num_, 0.0),
        in_tree_(arc_num_ + node_num_, 0),
        parent_(node_num_ + 1),
        pred_(node_num_ + 1),
        pred_up_(node_num_ + 1),
        depth_(node_num_ + 1),
        pi_big_(node_num_ + 1),
        pi_rem_(node_num_ + 1),
        adj_start_(node_num_ + 2),
        adj_(2 * node_num_),
        stack_() {
    double max_cost = 0.0;
    for (int i = 0; i < ns_; ++i) {
      for (int j = 0; j < nt_; ++j) {
        const int a = i * nt_ + j;
        source_[a] = i;
        target_[a] = ns_ + j;
        cost_[a] = cost(p.rows[i], p.cols[j]);
        max_cost = std::max(max_cost, cost_[a]);
      }
    }
    reduced_tol_ = 4.0 * node_num_ * DBL_EPSILON * std::max(1.0, max_cost);

    tree_.reserve(node_num_);
    for (int u = 0; u < node_num_; ++u) {
      const int e = arc_num_ + u;
      if (u < ns_) {
        source_[e] = u;
        target_[e] = root_;
        flow_[e] = p.supply[u];
      } else {
        source_[e] = root_;
        target_[e] = u;
        flow_[e] = p.demand[u - ns_];
      }
      in_tree_[e] = 1;
      tree_.push_back(e);
    }
    block_size_ = std::max(10, static_cast<int>(std::sqrt(static_cast<double>(arc_num_))));
    rebuild_tree();
  }

  void run() {
    int in_arc = -1;
    while ((in_arc = find_entering_arc()) >= 0) pivot(in_arc);
  }

  double flow(int i, int j) const { return flow_[i * nt_ + j]; }

 private:
  // Potential of an artificial arc: root->sink costs M, source->root costs 0.
  int arc_big(int e) const { return (e >= arc_num_ && source_[e] == root_) ? 1 : 0; }

  void rebuild_tree() {
    std::fill(adj_start_.begin(), adj_start_.end(), 0);
    for (int e : tree_) {
      ++adj_start_[source_[e] + 1];
      ++adj_start_[target_[e] + 1];
    }
    for (int u = 0; u <= node_num_; ++u) adj_start_[u + 1] += adj_start_[u];
    std::vector<int>& fill = scratch_;
    fill.assign(adj_start_.begin(), adj_start_.end() - 1);
    for (int e : tree_) {
      adj_[fill[source_[e]]++] = e;
      adj_[fill[target_[e]]++] = e;
    }

    parent_[root_] = -1;
    pred_[root_] = -1;
    depth_[root_] = 0;
    pi_big_[root_] = 0;
    pi_rem_[root_] = 0.0;
    stack_.clear();
    stack_.push_back(root_);
    while (!stack_.empty()) {
      const int u = stack_.back();
      stack_.pop_back();
      for (int k = adj_start_[u]; k < adj_start_[u + 1]; ++k) {
        const int e = adj_[k];
        if (e == pred_[u]) continue;
        const int v = source_[e] == u ? target_[e] : source_[e];
        parent_[v] = u;
        pred_[v] = e;
        depth_[v] = depth_[u] + 1;
        // Tree arcs have zero reduced cost: cost + pi[source] - pi[target] = 0.
        const bool up = source_[e] == v;
        pred_up_[v] = up;
        const int big = arc_big(e);
        if (up) {
          pi_big_[v] = pi_big_[u] - big;
          pi_rem_[v] = pi_rem_[u] - cost_[e];
        } else {
          pi_big_[v] = pi_big_[u] + big;
          pi_rem_[v] = pi_rem_[u] + cost_[e];
        }
        stack_.push_back(v);
      }
    }
  }

  // Block search pricing; within the scanned candidates the most negative
  // reduced cost wins and ties keep the earliest arc in scan order.
  int find_entering_arc() {
    int best = -1;
    int best_big = 0;
    double best_rem = -reduced_tol_;
    int count = block_size_;
    for (int step = 0; step < arc_num_; ++step) {
      const int e = (next_arc_ + step) % arc_num_;
      if (!in_tree_[e]) {
        const int s = source_[e];
        const int t = target_[e];
        const int big = pi_big_[s] - pi_big_[t];
        const double rem = cost_[e] + pi_rem_[s] - pi_rem_[t];
        if (big < best_big || (big == best_big && rem < best_rem)) {
          best = e;
          best_big = big;
          best_rem = rem;
        }
      }
      if (--count == 0) {
        if (best >= 0) {
          next_arc_ = (e + 1) % arc_num_;
          return best;
        }
        count = block_size_;
      }
    }
    return best;
  }

  int find_join(int u, int v) const {
    while (depth_[u] > depth_[v]) u = parent_[u];
    while (depth_[v] > depth_[u]) v = parent_[v];
    while (u != v) {
      u = parent_[u];
      v = parent_[v];
    }
    return u;
  }

  void pivot(int in_arc) {
    const int first = source_[in_arc];
    const int second = target_[in_arc];
    const int join = find_join(first, second);

    // Strongly feasible leaving rule: the last blocking arc when walking the
    // cycle from the join in the direction of the entering arc.
    double delta = kInf;
    int u_out = -1;
    for (int u = first; u != join; u = parent_[u]) {
      const double d = pred_up_[u] ? flow_[pred_[u]] : kInf;
      if (d < delta) {
        delta = d;
        u_out = u;
      }
    }
    for (int u = second; u != join; u = parent_[u]) {
      const double d = pred_up_[u] ? kInf : flow_[pred_[u]];
      if (d <= delta) {
        delta = d;
        u_out = u;
      }
    }
    if (u_out < 0) throw Error(ErrorCode::InvalidInput, "transport problem is unbounded");

    if (delta > 0.0) {
      flow_[in_arc] += delta;
      for (int u = first; u != join; u = parent_[u]) {
        flow_[pred_[u]] += pred_up_[u] ? -delta : delta;
      }
      for (int u = second; u != join; u = parent_[u]) {
        flow_[pred_[u]] += pred_up_[u] ? delta : -delta;
      }
    }
    const int out_arc = pred_[u_out];
    flow_[out_arc] = 0.0;
    in_tree_[out_arc] = 0;
    in_tree_[in_arc] = 1;
    *std::find(tree_.begin(), tree_.end(), out_arc) = in_arc;
    rebuild_tree();
  }

  int ns_, nt_, node_num_, root_, arc_num_;
  std::vector<int> source_, target_;
  std::vector<double> cost_, flow_;
  std::vector<char> in_tree_;
  std::vector<int> tree_;

  std::vector<int> parent_, pred_;
  std::vector<char> pred_up_;
  std::vector<int> depth_;
  std::vector<int> pi_big_;
  std::vector<double> pi_rem_;

  std::vector<int> adj_start_, adj_, stack_, scratch_;
  int block_size_ = 10;
  int next_arc_ = 0;
  double reduced_tol_ = 0.0;
};

}  // namespace

TransportPlan solve_transport(const TransportProblem& problem) {
  const CompactProblem c = compact(problem);
  TransportPlan plan;
  if (c.rows.empty() || c.cols.empty()) return plan;

  NetworkSimplex solver(c, problem.cost);
  solver.run();

  NeumaierSum objective;
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    for (std::size_t j = 0; j < c.cols.size(); ++j) {
      const double f = solver.flow(static_cast<int>(i), static_cast<int>(j));
      if (f > 0.0) {
        const double mass = f * c.mass;
        plan.entries.push_back({c.rows[i], c.cols[j], mass});
        objective.add(problem.cost(c.rows[i], c.cols[j]) * mass);
      }
    }
  }
  plan.objective = objective.value();
  return plan;
}

namespace {

/// Memoised search over "saturate one cell" sequences.
/// Flow value a + b * eps for an infinitesimal eps, ordered lexicographically.
struct Perturbed {
  double value = 0.0;
  double eps = 0.0;

  Perturbed& operator-=(const Perturbed& o) {
    value -= o.value;
    eps -= o.eps;
    return *this;
  }
};

constexpr double kFlowFloor = 1e-12;

bool lex_less(const Perturbed& a, const Perturbed& b) {
  if (std::abs(a.value - b.value) > kFlowFloor) return a.value < b.value;
  return a.eps < b.eps;
}

/// Exhaustive walk over the vertices of the transportation polytope.
///
/// Supplies get +eps and the last demand +ns * eps, which makes every basis
/// non-degenerate without moving the optimum. A basis is a spanning tree of
/// ns + nt - 1 cells stored as a bit mask; starting from the northwest
/// corner basis every feasible pivot is followed until no new basis appears.
class BruteForce {
 public:
  BruteForce(const CompactProblem& p, const Matrix& cost)
      : p_(p), cost_(cost), ns_(p.supply.size()), nt_(p.demand.size()) {
    for (double s : p.supply) margins_.push_back({s, 1.0});
    for (double d : p.demand) margins_.push_back({d, 0.0});
    margins_.back().eps = static_cast<double>(ns_);
  }

  double solve() {
    const std::uint64_t start = northwest_corner();
    std::vector<std::uint64_t> stack{start};
    std::unordered_set<std::uint64_t> seen{start};
    double best = kInf;
    std::vector<Perturbed> flow;
    while (!stack.empty()) {
      const std::uint64_t basis = stack.back();
      stack.pop_back();
      tree_flows(basis, flow);
      root_tree(basis);
      double total = 0.0;
      for (std::size_t e = 0; e < ns_ * nt_; ++e) {
        if (basis >> e & 1) total += cost_(p_.rows[e / nt_], p_.cols[e % nt_]) * flow[e].value;
      }
      best = std::min(best, total);
      // The lexicographic ratio test keeps every successor feasible.
      for (std::size_t e = 0; e < ns_ * nt_; ++e) {
        if (basis >> e & 1) continue;
        const std::size_t leave = leaving_edge(e, flow);
        const std::uint64_t next = (basis | (1ULL << e)) & ~(1ULL << leave);
        if (seen.insert(next).second) stack.push_back(next);
      }
    }
    return best;
  }

 private:
  std::uint64_t northwest_corner() const {
    std::uint64_t basis = 0;
    std::vector<Perturbed> r(margins_.begin(), margins_.begin() + ns_);
    std::vector<Perturbed> c(margins_.begin() + ns_, margins_.end());
    std::size_t i = 0, j = 0;
    for (;;) {
      basis |= 1ULL << (i * nt_ + j);
      if (i + 1 == ns_ && j + 1 == nt_) break;
      if (i + 1 < ns_ && (j + 1 == nt_ || lex_less(r[i], c[j]))) {
        c[j] -= r[i];
        ++i;
      } else {
        r[i] -= c[j];
        ++j;
      }
    }
    return basis;
  }

  /// Flows on a spanning tree by repeatedly peeling leaves.
  void tree_flows(std::uint64_t basis, std::vector<Perturbed>& flow) const {
    flow.assign(ns_ * nt_, Perturbed{});
    std::vector<Perturbed> residual = margins_;
    std::vector<std::size_t> degree(ns_ + nt_, 0);
    for (std::size_t e = 0; e < ns_ * nt_; ++e) {
      if (basis >> e & 1) {
        ++degree[e / nt_];
        ++degree[ns_ + e % nt_];
      }
    }
    std::uint64_t open = basis;
    std::vector<std::size_t> leaves;
    for (std::size_t v = 0; v < ns_ + nt_; ++v) {
      if (degree[v] == 1) leaves.push_back(v);
    }
    while (!leaves.empty()) {
      const std::size_t v = leaves.back();
      leaves.pop_back();
      if (degree[v] != 1) continue;
      std::size_t e = 0, other = 0;
      for (std::size_t k = 0; k < (v < ns_ ? nt_ : ns_); ++k) {
        e = v < ns_ ? v * nt_ + k : k * nt_ + (v - ns_);
        if (open >> e & 1) {
          other = v < ns_ ? ns_ + k : k;
          break;
        }
      }
      flow[e] = residual[v];
      residual[other] -= residual[v];
      open &= ~(1ULL << e);
      degree[v] = 0;
      if (--degree[other] == 1) leaves.push_back(other);
    }
  }

  void root_tree(std::uint64_t basis) {
    const std::size_t n = ns_ + nt_;
    parent_.assign(n, SIZE_MAX);
    parent_edge_.assign(n, 0);
    depth_.assign(n, 0);
    queue_.assign(1, 0);
    parent_[0] = 0;
    for (std::size_t q = 0; q < queue_.size(); ++q) {
      const std::size_t v = queue_[q];
      for (std::size_t k = 0; k < (v < ns_ ? nt_ : ns_); ++k) {
        const std::size_t cell = v < ns_ ? v * nt_ + k : k * nt_ + (v - ns_);
        const std::size_t w = v < ns_ ? ns_ + k : k;
        if (!(basis >> cell & 1) || parent_[w] != SIZE_MAX) continue;
        parent_[w] = v;
        parent_edge_[w] = cell;
        depth_[w] = depth_[v] + 1;
        queue_.push_back(w);
      }
    }
  }

  /// Lexicographically smallest flow among the cells that lose flow when
  /// `e` enters; they alternate along the cycle starting at e's column.
  std::size_t leaving_edge(std::size_t e, const std::vector<Perturbed>& flow) {
    std::size_t u = ns_ + e % nt_;
    std::size_t v = e / nt_;
    up_u_.clear();
    up_v_.clear();
    while (u != v) {
      if (depth_[u] >= depth_[v]) {
        up_u_.push_back(parent_edge_[u]);
        u = parent_[u];
      } else {
        up_v_.push_back(parent_edge_[v]);
        v = parent_[v];
      }
    }
    up_u_.insert(up_u_.end(), up_v_.rbegin(), up_v_.rend());
    std::size_t leave = up_u_.front();
    for (std::size_t k = 2; k < up_u_.size(); k += 2) {
      if (lex_less(flow[up_u_[k]], flow[leave])) leave = up_u_[k];
    }
    return leave;
  }

  const CompactProblem& p_;
  const Matrix& cost_;
  std::size_t ns_, nt_;
  std::vector<Perturbed> margins_;
  std::vector<std::size_t> parent_, parent_edge_, depth_, queue_, up_u_, up_v_;
};

}  // namespace

double brute_force_transport(const TransportProblem& problem) {
  if (problem.supply.size() * problem.demand.size() > kBruteForceMaxCells) {
    throw Error(ErrorCode::TooLarge, "brute force oracle limited to " +
                                         std::to_string(kBruteForceMaxCells) + " cells");
  }
  const CompactProblem c = compact(problem);
  if (c.rows.empty() || c.cols.empty()) return 0.0;
  BruteForce search(c, problem.cost);
  return search.solve() * c.mass;
}

Matrix uniform_cost(std::size_t m) {
  Matrix c(m, m, 2.0);
  for (std::size_t i = 0; i < m; ++i) c(i, i) = 0.0;
  return c;
}

double ot_uniform(const SparseVector& x, const SparseVector& y) {
  if (x.dim() != y.dim()) throw Error(ErrorCode::DimMismatch, "ot_uniform dimension mismatch");
  for (const SparseVector* v : {&x, &y}) {
    if (std::abs(v->sum() - 1.0) > kMarginTolerance) {
      throw Error(ErrorCode::NotNormalized, "ot_uniform expects L1-normalised inputs");
    }
  }
  NeumaierSum total;
  const auto& a = x.entries();
  const auto& b = y.entries();
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].id < b[j].id)) {
      total.add(a[i++].value);
    } else if (i == a.size() || b[j].id < a[i].id) {
      total.add(b[j++].value);
    } else {
      total.add(std::abs(a[i++].value - b[j++].value));
    }
  }
  return total.value();
}

}  // namespace wmdlab
