#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wmdlab/analysis.hpp"
#include "wmdlab/embeddings.hpp"
#include "wmdlab/knn.hpp"
#include "wmdlab/wmd.hpp"

namespace wmdlab::cli {

/// Raw settings keyed by option name with dashes, e.g. "keep-oov".
using Settings = std::map<std::string, std::string>;

/// Reads `key = value` lines. `#` starts a comment, blank lines and
/// `[section]` headers are skipped, values may be quoted, and underscores in
/// keys are read as dashes. Throws Io or ParseError (with the line number).
Settings read_config_file(const std::filesystem::path& path);

/// Every key accepted in a config file or as a flag.
const std::vector<std::string>& known_keys();

struct RunConfig {
  std::vector<std::filesystem::path> datasets;
  std::filesystem::path embeddings;
  EmbeddingFormat format = EmbeddingFormat::Word2VecBinary;
  std::vector<Method> methods;
  Classifier classifier = Classifier::Knn;
  bool clean = false;
  bool keep_oov = false;
  std::filesystem::path stopwords;
  std::vector<std::size_t> dims;
  bool renormalize = false;
  std::uint64_t seed = 1;
  int workers = 0;
  std::filesystem::path out = "out";
  bool no_compute = false;
  std::size_t folds = 5;  // used when a dataset ships without folds
  double train_fraction = 0.7;
  std::size_t pairs = 1000;
  double bin_width = kDefaultBinWidth;
  NeighborMode neighbors = NeighborMode::CrossSplit;
  std::string base = "bow-l1-l1";
  std::filesystem::path cache_dir;  // WMDLAB_CACHE_DIR, else <out>/cache
};

/// Builds a config from settings; unset keys keep their defaults. The
/// method list is comma separated; bare `bow` and `tfidf` take `norm` and
/// `metric`. Throws InvalidInput naming the offending key.
RunConfig make_config(const Settings& settings);

/// Settings that reproduce `config`, in key order.
Settings to_settings(const RunConfig& config);

}  // namespace wmdlab::cli
