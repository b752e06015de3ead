#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace wmdlab {

using WordId = std::uint32_t;

struct SparseEntry {
  WordId id;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Nonnegative sparse vector over a vocabulary of size `dim`.
///
/// Entries are kept sorted by id with strictly positive, finite values; zero
/// coordinates are never stored, so equality of two vectors is equality of
/// their entry lists.
class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(std::size_t dim) : dim_(dim) {}

  /// Builds from arbitrary (id, value) pairs: sorts, merges duplicate ids by
  /// summation and drops zeros. Throws InvalidInput on negative/non-finite
  /// values or ids outside `dim`.
  static SparseVector from_pairs(std::size_t dim, std::vector<std::pair<WordId, double>> pairs);

  /// Dense view, mostly for tests and small fixtures.
  static SparseVector from_dense(const std::vector<double>& dense);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<SparseEntry>& entries() const noexcept { return entries_; }

  double sum() const;
  double norm2() const;
  double at(WordId id) const;
  std::vector<double> to_dense() const;

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<SparseEntry> entries_;
};

}  // namespace wmdlab
