#include "wmdlab/knn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "wmdlab/error.hpp"
#include "wmdlab/numeric.hpp"
#include "wmdlab/random.hpp"

namespace wmdlab {

namespace {

struct Neighbor {
  double dist;
  std::size_t pos;
};

/// The `limit` nearest finite entries ordered by (distance, position).
std::vector<Neighbor> nearest(std::span<const double> row, std::size_t limit) {
  std::vector<Neighbor> all;
  all.reserve(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (std::isfinite(row[j])) all.push_back({row[j], j});
  }
  auto less = [](const Neighbor& a, const Neighbor& b) {
    return a.dist < b.dist || (a.dist == b.dist && a.pos < b.pos);
  };
  if (all.size() > limit) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(limit), all.end(), less);
    all.resize(limit);
  } else {
    std::sort(all.begin(), all.end(), less);
  }
  return all;
}

/// Weighted vote over the first k neighbours; gamma <= 0 means unit votes.
Label vote(const std::vector<Neighbor>& nb, std::size_t k, std::span<const Label> labels,
           double gamma) {
  struct Tally {
    double votes = 0.0;
    double dist = 0.0;
  };
  std::map<Label, Tally> tally;
  const double d0 = nb.front().dist;
  for (std::size_t i = 0; i < k; ++i) {
    auto& t = tally[labels[nb[i].pos]];
    t.votes += gamma > 0.0 ? std::exp(-(nb[i].dist - d0) / gamma) : 1.0;
    t.dist += nb[i].dist;
  }
  auto best = tally.begin();
  for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
    const auto& a = it->second;
    const auto& b = best->second;
    if (a.votes > b.votes || (a.votes == b.votes && a.dist < b.dist)) best = it;
  }
  return best->first;
}

Label predict(std::span<const double> row, std::span<const Label> labels, std::size_t k,
              double gamma) {
  if (k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
  if (row.size() != labels.size()) {
    throw Error(ErrorCode::InvalidInput, "distance row and label list differ in length");
  }
  const auto nb = nearest(row, k);
  if (nb.size() < k) {
    throw Error(ErrorCode::NotEnoughNeighbors, "only " + std::to_string(nb.size()) +
                                                   " finite distances for k = " +
                                                   std::to_string(k));
  }
  return vote(nb, k, labels, gamma);
}

struct Counts {
  std::size_t wrong = 0;
  std::size_t usable = 0;
  std::size_t excluded = 0;
  bool clamped = false;
};

/// Rows `rows` of `dist` against columns `cols`, one tally per candidate.
/// Each candidate is (k, gamma).
std::vector<Counts> score(const DistanceMatrix& dist, const std::vector<std::size_t>& rows,
                          const std::vector<Label>& row_labels,
                          const std::vector<std::size_t>& cols,
                          const std::vector<Label>& col_labels,
                          const std::vector<Hyperparams>& candidates, bool weighted) {
  const auto sub = dist.select(rows, cols);
  std::size_t kmax = 0;
  for (const auto& c : candidates) kmax = std::max(kmax, c.k);
  std::vector<Counts> out(candidates.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto nb = nearest(sub.row(i), kmax);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (nb.empty()) {
        ++out[c].excluded;
        continue;
      }
      std::size_t k = candidates[c].k;
      if (k > nb.size()) {
        k = nb.size();
        out[c].clamped = true;
      }
      ++out[c].usable;
      if (vote(nb, k, col_labels, weighted ? candidates[c].gamma : 0.0) != row_labels[i]) {
        ++out[c].wrong;
      }
    }
  }
  return out;
}

std::vector<Label> labels_of(const LabeledSplit& split, const std::vector<std::size_t>& ids) {
  std::vector<Label> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(split.train_label(id));
  return out;
}

}  // namespace

Label knn_predict(std::span<const double> dist_row, std::span<const Label> train_labels,
                  std::size_t k) {
  return predict(dist_row, train_labels, k, 0.0);
}

Label wknn_predict(std::span<const double> dist_row, std::span<const Label> train_labels,
                   std::size_t k, double gamma) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::InvalidInput, "gamma must be positive");
  return predict(dist_row, train_labels, k, gamma);
}

std::string_view to_string(Classifier c) noexcept { return c == Classifier::Knn ? "knn" : "wknn"; }

Classifier parse_classifier(std::string_view text) {
  if (text == "knn") return Classifier::Knn;
  if (text == "wknn") return Classifier::Wknn;
  throw Error(ErrorCode::InvalidInput, "unknown classifier '" + std::string(text) + "'");
}

TuningGrid TuningGrid::standard() {
  TuningGrid g;
  for (std::size_t k = 1; k <= 19; ++k) g.k_candidates.push_back(k);
  for (int i = 1; i <= 20; ++i) g.gamma_candidates.push_back(0.005 * i);
  g.wknn_k = 19;
  return g;
}

const Label& LabeledSplit::train_label(std::size_t id) const {
  auto it = std::lower_bound(train_ids.begin(), train_ids.end(), id);
  if (it == train_ids.end() || *it != id) {
    throw Error(ErrorCode::InvalidInput, "document " + std::to_string(id) + " is not in train");
  }
  return train_labels[static_cast<std::size_t>(it - train_ids.begin())];
}

std::vector<std::size_t> LabeledSplit::fit_ids() const {
  std::vector<std::size_t> out;
  std::set_difference(train_ids.begin(), train_ids.end(), validation_ids.begin(),
                      validation_ids.end(), std::back_inserter(out));
  return out;
}

LabeledSplit make_split(const Corpus& corpus, const Fold& fold, std::uint64_t seed,
                        double validation_fraction) {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "validation fraction must lie in (0, 1)");
  }
  LabeledSplit s;
  s.train_ids = fold.train;
  s.test_ids = fold.test;
  std::sort(s.train_ids.begin(), s.train_ids.end());
  for (auto id : s.train_ids) s.train_labels.push_back(corpus.by_id(id).label);
  for (auto id : s.test_ids) s.test_labels.push_back(corpus.by_id(id).label);
  const std::size_t n = s.train_ids.size();
  if (n < 2) throw Error(ErrorCode::TooSmall, "need at least two training documents");
  auto n_val = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  std::mt19937_64 rng(seed);
  auto order = s.train_ids;
  shuffle(order, rng);
  s.validation_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::sort(s.validation_ids.begin(), s.validation_ids.end());
  return s;
}

EvalResult evaluate(const DistanceMatrix& dist, const LabeledSplit& split, Classifier classifier,
                    Hyperparams params) {
  if (params.k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
  const bool weighted = classifier == Classifier::Wknn;
  if (weighted && !(params.gamma > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "gamma must be positive");
  }
  const auto c = score(dist, split.test_ids, split.test_labels, split.train_ids,
                       split.train_labels, {params}, weighted)[0];
  EvalResult r;
  r.misclassified = c.wrong;
  r.usable = c.usable;
  r.excluded = c.excluded;
  r.k_used = params.k;
  r.k_clamped = c.clamped;
  r.error_percent = c.usable ? 100.0 * static_cast<double>(c.wrong) / static_cast<double>(c.usable)
                             : 0.0;
  return r;
}

Hyperparams tune(const DistanceMatrix& dist, const LabeledSplit& split, Classifier classifier,
                 const TuningGrid& grid) {
  if (split.validation_ids.empty()) throw Error(ErrorCode::EmptyValidation, "no validation documents");
  std::vector<Hyperparams> candidates;
  if (classifier == Classifier::Knn) {
    for (auto k : grid.k_candidates) candidates.push_back({k, 0.0});
  } else {
    for (auto g : grid.gamma_candidates) candidates.push_back({grid.wknn_k, g});
  }
  if (candidates.empty()) throw Error(ErrorCode::InvalidInput, "empty tuning grid");
  for (const auto& c : candidates) {
    if (c.k == 0) throw Error(ErrorCode::InvalidInput, "k must be at least 1");
    if (classifier == Classifier::Wknn && !(c.gamma > 0.0)) {
      throw Error(ErrorCode::InvalidInput, "gamma must be positive");
    }
  }
  const auto fit = split.fit_ids();
  const auto counts = score(dist, split.validation_ids, labels_of(split, split.validation_ids),
                            fit, labels_of(split, fit), candidates,
                            classifier == Classifier::Wknn);
  if (counts[0].usable == 0) {
    throw Error(ErrorCode::EmptyValidation, "no validation document has a finite neighbour");
  }
  std::size_t best = 0;
  auto smaller = [&](std::size_t a, std::size_t b) {
    return classifier == Classifier::Knn ? candidates[a].k < candidates[b].k
                                         : candidates[a].gamma < candidates[b].gamma;
  };
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    if (counts[c].wrong < counts[best].wrong ||
        (counts[c].wrong == counts[best].wrong && smaller(c, best))) {
      best = c;
    }
  }
  return candidates[best];
}

RelativeScore relative_performance(const ErrorTable& errors, const std::string& method,
                                   const std::string& base) {
  auto m = errors.find(method), b = errors.find(base);
  if (m == errors.end()) throw Error(ErrorCode::InvalidInput, "no errors for '" + method + "'");
  if (b == errors.end()) throw Error(ErrorCode::InvalidInput, "no errors for '" + base + "'");
  RelativeScore r;
  NeumaierSum sum;
  for (const auto& [dataset, err] : m->second) {
    auto it = b->second.find(dataset);
    if (it == b->second.end()) continue;
    if (it->second == 0.0) {
      r.zero_base.push_back(dataset);
      continue;
    }
    sum.add(err / it->second);
    ++r.datasets;
  }
  if (r.datasets == 0) {
    throw Error(ErrorCode::DivisionByZero, "no dataset with a nonzero base error for '" + base + "'");
  }
  r.value = sum.value() / static_cast<double>(r.datasets);
  return r;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  NeumaierSum sum;
  for (double v : values) sum.add(v);
  s.mean = sum.value() / static_cast<double>(values.size());
  if (values.size() > 1) {
    NeumaierSum sq;
    for (double v : values) sq.add((v - s.mean) * (v - s.mean));
    s.stddev = std::sqrt(sq.value() / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace wmdlab
