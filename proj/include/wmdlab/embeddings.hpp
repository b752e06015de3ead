#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "wmdlab/matrix.hpp"

namespace wmdlab {

/// Word vectors of a common dimension stored contiguously, one row per word.
class EmbeddingStore {
 public:
  explicit EmbeddingStore(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool normalized() const noexcept { return normalized_; }
  const std::vector<std::string>& words() const noexcept { return words_; }

  bool contains(std::string_view word) const { return index(word).has_value(); }
  std::optional<std::size_t> index(std::string_view word) const;
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  /// Throws MissingWord.
  std::span<const double> vector(std::string_view word) const;

  /// Adds a word; returns false and keeps the existing vector for a repeat.
  /// Throws DimMismatch if `v` has the wrong length.
  bool add(const std::string& word, std::span<const double> v);

  void set_normalized(bool flag) noexcept { normalized_ = flag; }

 private:
  std::size_t dim_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
  bool normalized_ = false;
};

enum class EmbeddingFormat { Word2VecBinary, Text };

std::string_view to_string(EmbeddingFormat f) noexcept;
EmbeddingFormat parse_embedding_format(std::string_view text);

/// When `keep` is given only those words are retained (parsing still
/// validates every record). Errors: Io, ParseError (with byte offset),
/// DimMismatch.
EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                               const std::unordered_set<std::string>* keep = nullptr);

/// Writes with a `count dim` header; text values use 17 significant digits.
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path,
                     EmbeddingFormat format);

/// Throws ZeroVector naming the offending word.
EmbeddingStore l2_normalize(const EmbeddingStore& store);

/// Euclidean distances between the embeddings of two word lists.
/// Throws MissingWord.
Matrix cost_submatrix(const EmbeddingStore& store, std::span<const std::string> src,
                      std::span<const std::string> dst);
Matrix cost_submatrix(const EmbeddingStore& store, std::span<const std::size_t> src_rows,
                      std::span<const std::size_t> dst_rows);

double euclidean(std::span<const double> a, std::span<const double> b);

/// Principal axes of the fitted words' covariance, largest variance first.
struct PcaBasis {
  std::vector<double> mean;        // length d
  Matrix components;               // d' x d, orthonormal rows
  std::vector<double> variances;   // length d', non-increasing
};

/// Throws InvalidInput for a bad target dimension or too few fit words,
/// MissingWord, and RankDeficient.
PcaBasis fit_pca(const EmbeddingStore& store, std::size_t target_dim,
                 std::span<const std::string> fit_vocab);

/// Centres and projects every stored vector; the result is not normalised.
EmbeddingStore project_pca(const EmbeddingStore& store, std::size_t target_dim,
                           std::span<const std::string> fit_vocab);

}  // namespace wmdlab
