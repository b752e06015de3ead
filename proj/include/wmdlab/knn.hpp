#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wmdlab/wmd.hpp"

namespace wmdlab {

using Label = std::string;

/// Majority label among the k nearest finite distances. Positions in the
/// row stand for train ids in ascending order, so distance ties go to the
/// lower position. Label ties go to the smaller summed distance, then the
/// lexicographically smaller label. Throws InvalidInput for k == 0 or
/// mismatched lengths, NotEnoughNeighbors when fewer than k are finite.
Label knn_predict(std::span<const double> dist_row, std::span<const Label> train_labels,
                  std::size_t k);

/// As knn_predict with votes exp(-d / gamma). Votes are computed relative to
/// the nearest distance, which leaves the argmax unchanged and avoids
/// underflow for tiny gamma.
Label wknn_predict(std::span<const double> dist_row, std::span<const Label> train_labels,
                   std::size_t k, double gamma);

enum class Classifier { Knn, Wknn };

std::string_view to_string(Classifier c) noexcept;
Classifier parse_classifier(std::string_view text);

struct TuningGrid {
  std::vector<std::size_t> k_candidates;
  std::vector<double> gamma_candidates;
  std::size_t wknn_k = 19;

  /// k in 1..19, gamma in 0.005..0.100 step 0.005, wkNN k fixed to 19.
  static TuningGrid standard();
};

struct Hyperparams {
  std::size_t k = 1;
  double gamma = 0.0;  // wkNN only
};

struct LabeledSplit {
  std::vector<std::size_t> train_ids;  // ascending
  std::vector<Label> train_labels;
  std::vector<std::size_t> test_ids;
  std::vector<Label> test_labels;
  std::vector<std::size_t> validation_ids;  // ascending subset of train_ids

  const Label& train_label(std::size_t id) const;
  /// Train ids outside the validation subset.
  std::vector<std::size_t> fit_ids() const;
};

/// Builds a split from a corpus fold; `validation_fraction` of the train
/// documents (rounded, at least one, never all) are drawn with `seed`.
/// Throws TooSmall when the fold has fewer than two train documents.
LabeledSplit make_split(const Corpus& corpus, const Fold& fold, std::uint64_t seed,
                        double validation_fraction = 0.2);

struct EvalResult {
  double error_percent = 0.0;
  std::size_t misclassified = 0;
  std::size_t usable = 0;
  std::size_t excluded = 0;  // test rows with no finite distance
  std::size_t k_used = 0;
  bool k_clamped = false;
};

/// Classifies the test rows of `dist` (rows ⊇ split.test_ids, columns ⊇
/// split.train_ids) using `train` as the reference set. k is clamped to the
/// number of finite neighbours available, per row.
EvalResult evaluate(const DistanceMatrix& dist, const LabeledSplit& split, Classifier classifier,
                    Hyperparams params);

/// Chooses k (kNN) or gamma (wkNN, with k = grid.wknn_k) minimising the
/// error of validation rows against the fit columns; ties go to the smaller
/// candidate. Throws EmptyValidation.
Hyperparams tune(const DistanceMatrix& dist, const LabeledSplit& split, Classifier classifier,
                 const TuningGrid& grid);

/// method -> dataset -> error percent.
using ErrorTable = std::map<std::string, std::map<std::string, double>>;

struct RelativeScore {
  double value = 0.0;
  std::vector<std::string> zero_base;  // datasets skipped for a zero base error
  std::size_t datasets = 0;            // datasets averaged
};

/// Mean over datasets of error(method) / error(base). Datasets missing from
/// either row are ignored. Throws InvalidInput for an unknown method and
/// DivisionByZero when every shared dataset has a zero base error.
RelativeScore relative_performance(const ErrorTable& errors, const std::string& method,
                                   const std::string& base);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one value
};

Summary summarize(std::span<const double> values);

}  // namespace wmdlab
