#include <algorithm>
#include <cmath>

#include "wmdlab/error.hpp"
#include "wmdlab/matrix.hpp"
#include "wmdlab/sparse_vector.hpp"

namespace wmdlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::UnbalancedProblem: return "UnbalancedProblem";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InconsistentStats: return "InconsistentStats";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingWord: return "MissingWord";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EmptySupport: return "EmptySupport";
    case ErrorCode::NotEnoughNeighbors: return "NotEnoughNeighbors";
    case ErrorCode::EmptyValidation: return "EmptyValidation";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::MissingFoldFile: return "MissingFoldFile";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::NoFiniteNeighbor: return "NoFiniteNeighbor";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::DimMismatch, "matrix data length does not match shape");
  }
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  }
  return t;
}

SparseVector SparseVector::from_pairs(std::size_t dim,
                                      std::vector<std::pair<WordId, double>> pairs) {
  std::sort(pairs.begin(), pairs.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  SparseVector v(dim);
  for (const auto& [id, value] : pairs) {
    if (id >= dim) throw Error(ErrorCode::InvalidInput, "sparse id out of range");
    if (!std::isfinite(value) || value < 0.0) {
      throw Error(ErrorCode::InvalidInput, "sparse values must be finite and nonnegative");
    }
    if (!v.entries_.empty() && v.entries_.back().id == id) {
      v.entries_.back().value += value;
    } else {
      v.entries_.push_back({id, value});
    }
  }
  std::erase_if(v.entries_, [](const SparseEntry& e) { return e.value == 0.0; });
  return v;
}

SparseVector SparseVector::from_dense(const std::vector<double>& dense) {
  std::vector<std::pair<WordId, double>> pairs;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) pairs.emplace_back(static_cast<WordId>(i), dense[i]);
  }
  return from_pairs(dense.size(), std::move(pairs));
}

double SparseVector::sum() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value;
  return s;
}

double SparseVector::norm2() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return std::sqrt(s);
}

double SparseVector::at(WordId id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), id,
                             [](const SparseEntry& e, WordId key) { return e.id < key; });
  return (it != entries_.end() && it->id == id) ? it->value : 0.0;
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(dim_, 0.0);
  for (const auto& e : entries_) out[e.id] = e.value;
  return out;
}

}  // namespace wmdlab
