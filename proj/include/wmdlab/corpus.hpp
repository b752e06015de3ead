#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "wmdlab/embeddings.hpp"
#include "wmdlab/textrep.hpp"

namespace wmdlab {

struct Document {
  std::size_t id = 0;
  std::string label;
  TokenList tokens;
};

struct Fold {
  std::vector<std::size_t> train;  // ascending ids
  std::vector<std::size_t> test;
};

enum class SplitType { Unspecified, OneFold, FiveFold };

std::string_view to_string(SplitType s) noexcept;

class Corpus {
 public:
  std::string name;
  SplitType split = SplitType::Unspecified;
  std::vector<Document> documents;  // ascending ids
  std::vector<Fold> folds;

  /// Throws InvalidInput for an unknown id.
  const Document& by_id(std::size_t id) const;
  bool contains(std::size_t id) const;
  /// Sorted distinct labels.
  std::vector<std::string> labels() const;
  std::vector<TokenList> token_lists() const;

  /// Rebuilds the id lookup; call after editing `documents` directly.
  void reindex();

 private:
  std::unordered_map<std::size_t, std::size_t> position_;
};

/// Reads `label TAB tokens` lines. Ids are 0-based line numbers. An optional
/// `<path>.meta` holds `name=` and `split=` lines and fold files are
/// `<path>.fold<k>`. Errors: Io, ParseError (with line number),
/// MissingFoldFile when a five-fold corpus lacks any of its fold files.
Corpus load_corpus(const std::filesystem::path& path);

/// Writes the corpus, its meta file and fold files. Documents are renumbered
/// by position when ids are not 0..n-1, with folds remapped accordingly.
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// One token per line; blank lines ignored.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

/// Drops stopwords and, unless `keep_oov`, tokens missing from `store`.
/// Throws InvalidInput if `store` is null while `keep_oov` is false.
Corpus filter_vocabulary(const Corpus& corpus, const EmbeddingStore* store,
                         const std::unordered_set<std::string>* stopwords, bool keep_oov);

using IdPair = std::pair<std::size_t, std::size_t>;

struct DuplicateReport {
  std::vector<IdPair> pairs;        // first < second, sorted
  std::vector<std::size_t> samples; // sorted
  std::vector<IdPair> cross_split;  // train/test in at least one fold
  std::vector<IdPair> conflicting;  // differing labels
  std::vector<std::vector<std::size_t>> classes;  // sorted, size >= 2
};

DuplicateReport find_duplicates(const Corpus& corpus);

struct Removal {
  std::size_t id = 0;
  std::size_t kept = 0;  // equals id for conflicting classes
  std::string reason;
};

struct DedupResult {
  Corpus corpus;
  std::vector<Removal> removals;
};

/// Keeps one representative per class: the member that is in the training
/// side of the most folds, then the smallest id. Classes with conflicting
/// labels are removed entirely when `drop_conflicting` is set.
DedupResult deduplicate(const Corpus& corpus, const DuplicateReport& report,
                        bool drop_conflicting = true);

/// Replaces the folds with `n_folds` seeded shuffles, each putting
/// round(train_fraction * n) documents in train. Throws InvalidInput for bad
/// arguments and TooSmall when a side would be empty.
Corpus make_folds(const Corpus& corpus, std::size_t n_folds, double train_fraction,
                  std::uint64_t seed);

}  // namespace wmdlab
