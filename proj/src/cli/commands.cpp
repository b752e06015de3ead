#include "wmdlab/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <unordered_set>

#include <openssl/evp.h>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "wmdlab/analysis.hpp"
#include "wmdlab/corpus.hpp"
#include "wmdlab/error.hpp"
#include "wmdlab/knn.hpp"
#include "wmdlab/random.hpp"

namespace wmdlab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw Error(ErrorCode::Io, "SHA-256 unavailable");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const void* data, std::size_t size) { EVP_DigestUpdate(ctx_, data, size); }
  void update(std::string_view s) { update(s.data(), s.size()); }

  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string safe_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "dataset" : out;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_output(path);
  out << j.dump(2) << '\n';
}

std::string g17(double v) { return fmt::format("{:.17g}", v); }

struct Dataset {
  fs::path path;
  std::string name;
  Corpus corpus;
  std::optional<DistanceResources> wmd;  // out-of-vocabulary words dropped
  std::optional<DistanceResources> vec;  // dropped unless keep_oov
};

class Session {
 public:
  Session(const RunConfig& config, std::string command)
      : cfg_(config), command_(std::move(command)) {
    if (!cfg_.stopwords.empty()) {
      stopwords_ = load_stopwords(cfg_.stopwords);
      record_input("stopwords", cfg_.stopwords);
    }
  }

  const RunConfig& config() const { return cfg_; }

  void require_datasets() const {
    if (cfg_.datasets.empty()) {
      throw Error(ErrorCode::InvalidInput, "--dataset is required for '" + command_ + "'");
    }
  }

  void require_embeddings(const std::string& why) const {
    if (cfg_.embeddings.empty()) {
      throw Error(ErrorCode::InvalidInput, "--embeddings is required " + why);
    }
    if (!fs::exists(cfg_.embeddings)) {
      throw Error(ErrorCode::Io, "--embeddings: no such file " + cfg_.embeddings.string());
    }
  }

  /// Loads every dataset, applying --clean and generating folds when none ship.
  std::vector<Dataset> load_datasets(bool prepare) {
    require_datasets();
    std::vector<Dataset> out;
    for (const auto& path : cfg_.datasets) {
      Dataset d;
      d.path = path;
      d.corpus = load_corpus(path);
      record_input("dataset:" + path.string(), path);
      d.name = safe_name(d.corpus.name.empty() ? path.stem().string() : d.corpus.name);
      if (prepare) {
        if (cfg_.clean) {
          auto dedup = deduplicate(d.corpus, find_duplicates(d.corpus));
          spdlog::info("{}: --clean removed {} documents", d.name, dedup.removals.size());
          d.corpus = std::move(dedup.corpus);
        }
        if (d.corpus.folds.empty()) {
          d.corpus = make_folds(d.corpus, cfg_.folds, cfg_.train_fraction, cfg_.seed);
          spdlog::info("{}: generated {} folds with train fraction {}", d.name, cfg_.folds,
                       cfg_.train_fraction);
        }
      }
      for (const auto& doc : d.corpus.documents) tokens_.insert(doc.tokens.begin(), doc.tokens.end());
      out.push_back(std::move(d));
    }
    return out;
  }

  /// L2-normalised embeddings restricted to the loaded datasets' tokens
  /// (every word when `all_words`).
  const EmbeddingStore& store(const std::string& why, bool all_words = false) {
    if (!store_) {
      require_embeddings(why);
      record_input("embeddings", cfg_.embeddings);
      spdlog::info("loading embeddings from {}", cfg_.embeddings.string());
      auto raw = load_embeddings(cfg_.embeddings, cfg_.format, all_words ? nullptr : &tokens_);
      spdlog::info("{} vectors of dimension {}", raw.size(), raw.dim());
      store_ = l2_normalize(raw);
    }
    return *store_;
  }

  const DistanceResources& resources(Dataset& d, const Method& m) {
    const auto* stop = stopwords_ ? &*stopwords_ : nullptr;
    if (m.uses_embeddings()) {
      if (!d.wmd) {
        const auto& s = store("for " + m.label());
        d.wmd.emplace(filter_vocabulary(d.corpus, &s, stop, false), &s);
      }
      return *d.wmd;
    }
    if (!d.vec) {
      const EmbeddingStore* s = nullptr;
      if (!cfg_.keep_oov) {
        s = &store("to drop out-of-vocabulary words for " + m.label() + " (or pass --keep-oov)");
      } else if (store_) {
        s = &*store_;
      }
      d.vec.emplace(filter_vocabulary(d.corpus, s, stop, cfg_.keep_oov), s);
    }
    return *d.vec;
  }

  /// Rows: test and train ids of the fold; columns: train ids.
  DistanceMatrix fold_distances(Dataset& d, std::size_t f, const Method& m) {
    const auto& res = resources(d, m);
    const auto& fold = d.corpus.folds.at(f);
    std::vector<std::size_t> rows = fold.test;
    rows.insert(rows.end(), fold.train.begin(), fold.train.end());
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    const auto& cols = fold.train;

    Sha256 h;
    h.update(fmt::format("wmdlab distance cache\nversion {}\nmethod {}\n", WMDLAB_VERSION, m.tag()));
    for (const auto& doc : res.corpus().documents) {
      h.update(fmt::format("{}\t{}\t", doc.id, doc.label));
      for (const auto& t : doc.tokens) {
        h.update(t);
        h.update(" ");
      }
      h.update("\n");
    }
    for (auto id : rows) h.update(fmt::format("r{} ", id));
    for (auto id : cols) h.update(fmt::format("c{} ", id));
    if (m.uses_embeddings()) h.update("embeddings " + input_hash("embeddings"));
    const auto key = h.hex();

    const std::string stem = d.name + (cfg_.clean ? "-clean" : "") + "-fold" + std::to_string(f) +
                             "-" + m.tag();
    const auto path = cfg_.cache_dir / (stem + ".dist");
    const auto key_path = cfg_.cache_dir / (stem + ".key");

    std::string stored;
    if (std::ifstream k(key_path); k) std::getline(k, stored);
    if (stored == key && fs::exists(path)) {
      try {
        auto cached = read_distance_matrix(path);
        if (cached.row_ids != rows || cached.col_ids != cols) {
          throw Error(ErrorCode::ParseError, "ids do not match the fold");
        }
        spdlog::info("cache hit: {}", path.string());
        return cached;
      } catch (const Error& e) {
        spdlog::warn("corrupt cache {} ({}); recomputing", path.string(), e.what());
      }
    } else if (fs::exists(path)) {
      spdlog::info("stale cache {}; recomputing", path.string());
    } else {
      spdlog::info("cache miss: {}", path.string());
    }
    if (cfg_.no_compute) {
      throw Error(ErrorCode::Io, "no valid distance cache " + path.string() + " and --no-compute is set");
    }

    spdlog::info("{} fold {}: computing {} ({} x {})", d.name, f, m.label(), rows.size(),
                 cols.size());
    auto result = pairwise_distances(rows, cols, m, res, cfg_.workers);
    if (!result.unusable.empty()) {
      spdlog::warn("{} {}: {} documents have no usable words and are excluded", d.name, m.label(),
                   result.unusable.size());
    }
    fs::create_directories(cfg_.cache_dir);
    const auto tmp = path.string() + ".tmp";
    write_distance_matrix(result.matrix, tmp);
    fs::rename(tmp, path);
    auto k = open_output(key_path);
    k << key << '\n';
    return std::move(result.matrix);
  }

  void record_seed(const std::string& name, std::uint64_t seed) { seeds_[name] = seed; }

  void write_manifest(const std::string& status) {
    json j;
    j["tool"] = "wmdlab";
    j["version"] = WMDLAB_VERSION;
    j["command"] = command_;
    j["status"] = status;
    j["config"] = to_settings(cfg_);
    j["seed"] = cfg_.seed;
    j["derived_seeds"] = seeds_;
    j["inputs"] = inputs_;
    write_json(cfg_.out / ("manifest-" + command_ + ".json"), j);
  }

 private:
  void record_input(const std::string& name, const fs::path& path) {
    if (inputs_.contains(name)) return;
    json entry;
    entry["path"] = path.string();
    entry["sha256"] = sha256_file(path);
    for (const char* suffix : {".meta", ".fold0", ".fold1", ".fold2", ".fold3", ".fold4"}) {
      fs::path side = path.string() + suffix;
      if (name.rfind("dataset:", 0) == 0 && fs::exists(side)) {
        entry["sidecars"][side.filename().string()] = sha256_file(side);
      }
    }
    inputs_[name] = entry;
  }

  std::string input_hash(const std::string& name) const {
    auto it = inputs_.find(name);
    return it == inputs_.end() ? std::string() : it->at("sha256").get<std::string>();
  }

  const RunConfig& cfg_;
  std::string command_;
  std::optional<std::unordered_set<std::string>> stopwords_;
  std::unordered_set<std::string> tokens_;
  std::optional<EmbeddingStore> store_;
  json inputs_ = json::object();
  std::map<std::string, std::uint64_t> seeds_;
};

/// Runs `body`, then writes the manifest with the outcome.
template <class Body>
void with_manifest(Session& s, Body body) {
  try {
    body();
  } catch (...) {
    try {
      s.write_manifest("failed");
    } catch (const std::exception& e) {
      spdlog::warn("could not write manifest: {}", e.what());
    }
    throw;
  }
  s.write_manifest("ok");
}

std::vector<std::size_t> usable_ids(const DistanceResources& res) {
  std::vector<std::size_t> out;
  for (const auto& doc : res.corpus().documents) {
    if (!res.vector(doc.id, MethodKind::Bow, NormScheme::L1).empty()) out.push_back(doc.id);
  }
  return out;
}

json pairs_json(const std::vector<IdPair>& pairs) {
  json a = json::array();
  for (const auto& [x, y] : pairs) a.push_back({x, y});
  return a;
}

}  // namespace

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 20);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_text(std::string_view text) {
  Sha256 h;
  h.update(text);
  return h.hex();
}

void cmd_dists(const RunConfig& cfg) {
  Session s(cfg, "dists");
  with_manifest(s, [&] {
    auto datasets = s.load_datasets(true);
    std::size_t files = 0;
    for (auto& d : datasets) {
      for (std::size_t f = 0; f < d.corpus.folds.size(); ++f) {
        for (const auto& m : cfg.methods) {
          s.fold_distances(d, f, m);
          ++files;
        }
      }
    }
    spdlog::info("{} distance matrices in {}", files, cfg.cache_dir.string());
  });
}

void cmd_eval(const RunConfig& cfg) {
  Session s(cfg, "eval");
  with_manifest(s, [&] {
    auto datasets = s.load_datasets(true);
    for (auto& d : datasets) {
      for (const auto& m : cfg.methods) s.resources(d, m);
    }
    const auto grid = TuningGrid::standard();
    auto csv = open_output(cfg.out / "eval.csv");
    csv << "dataset,method,norm,metric,classifier,k,gamma,fold,error_percent,excluded_docs\n";
    ErrorTable means;
    json results = json::array();
    for (auto& d : datasets) {
      for (const auto& m : cfg.methods) {
        std::vector<double> errors;
        json ks = json::array(), gammas = json::array();
        for (std::size_t f = 0; f < d.corpus.folds.size(); ++f) {
          const auto dist = s.fold_distances(d, f, m);
          const auto split_seed = derive_seed(cfg.seed, f);
          s.record_seed(d.name + "/fold" + std::to_string(f), split_seed);
          const auto split = make_split(d.corpus, d.corpus.folds[f], split_seed);
          const auto params = tune(dist, split, cfg.classifier, grid);
          const auto r = evaluate(dist, split, cfg.classifier, params);
          const bool vec = !m.uses_embeddings();
          csv << d.name << ',' << m.tag() << ',' << (vec ? to_string(m.norm) : "-") << ','
              << (vec ? to_string(m.metric) : "-") << ',' << to_string(cfg.classifier) << ','
              << params.k << ','
              << (cfg.classifier == Classifier::Wknn ? fmt::format("{:.3f}", params.gamma) : "-")
              << ',' << f << ',' << fmt::format("{:.6f}", r.error_percent) << ',' << r.excluded
              << '\n';
          if (r.k_clamped) spdlog::warn("{} {} fold {}: k clamped to the neighbours available", d.name, m.tag(), f);
          errors.push_back(r.error_percent);
          ks.push_back(params.k);
          gammas.push_back(params.gamma);
        }
        const auto sum = summarize(errors);
        means[m.tag()][d.name] = sum.mean;
        spdlog::info("{} {}: {:.1f} ± {:.1f} % over {} folds", d.name, m.label(), sum.mean,
                     sum.stddev, errors.size());
        json row;
        row["dataset"] = d.name;
        row["method"] = m.tag();
        row["label"] = m.label();
        row["mean"] = sum.mean;
        row["std"] = sum.stddev;
        row["errors"] = errors;
        row["k"] = ks;
        if (cfg.classifier == Classifier::Wknn) row["gamma"] = gammas;
        results.push_back(row);
      }
    }
    json summary;
    summary["classifier"] = std::string(to_string(cfg.classifier));
    summary["base"] = cfg.base;
    summary["results"] = results;
    json rel = json::object();
    if (means.count(cfg.base)) {
      for (const auto& m : cfg.methods) {
        const auto r = relative_performance(means, m.tag(), cfg.base);
        rel[m.tag()] = {{"value", r.value}, {"datasets", r.datasets}, {"zero_base", r.zero_base}};
        spdlog::info("rel. {} = {:.3f}", m.label(), r.value);
      }
    } else {
      spdlog::warn("base method {} not in the method grid; rel. omitted", cfg.base);
    }
    summary["rel"] = rel;
    write_json(cfg.out / "eval_summary.json", summary);
  });
}

void cmd_dedup(const RunConfig& cfg) {
  Session s(cfg, "dedup");
  with_manifest(s, [&] {
    for (auto& d : s.load_datasets(false)) {
      const auto report = find_duplicates(d.corpus);
      const auto result = deduplicate(d.corpus, report);
      json j;
      j["dataset"] = d.name;
      j["documents"] = d.corpus.documents.size();
      j["counts"] = {{"pairs", report.pairs.size()},
                     {"samples", report.samples.size()},
                     {"cross_split", report.cross_split.size()},
                     {"conflicting", report.conflicting.size()}};
      j["pairs"] = pairs_json(report.pairs);
      j["samples"] = report.samples;
      j["cross_split"] = pairs_json(report.cross_split);
      j["conflicting"] = pairs_json(report.conflicting);
      json removals = json::array();
      for (const auto& r : result.removals) {
        removals.push_back({{"id", r.id}, {"kept", r.kept}, {"reason", r.reason}});
      }
      j["removals"] = removals;
      write_json(cfg.out / (d.name + "-duplicates.json"), j);
      const auto clean_path = cfg.out / (d.name + "-clean.txt");
      fs::create_directories(cfg.out);
      write_corpus(result.corpus, clean_path);
      spdlog::info("{}: {} duplicate pairs, {} samples; clean corpus {} ({} documents)", d.name,
                   report.pairs.size(), report.samples.size(), clean_path.string(),
                   result.corpus.documents.size());
    }
  });
}

void cmd_analyze(const RunConfig& cfg) {
  Session s(cfg, "analyze");
  with_manifest(s, [&] {
    s.require_datasets();
    s.require_embeddings("for 'analyze'");
    auto datasets = s.load_datasets(true);
    const Method wmd;
    for (auto& d : datasets) {
      const auto& res = s.resources(d, wmd);
      const auto& fold = d.corpus.folds.front();
      const auto dist = s.fold_distances(d, 0, wmd);
      const bool loo = cfg.neighbors == NeighborMode::LeaveOneOut;
      const auto sub = dist.select(loo ? fold.train : fold.test, fold.train);
      std::vector<std::size_t> sources;
      for (std::size_t i = 0; i < sub.n_rows; ++i) {
        std::size_t finite = 0;
        for (std::size_t j = 0; j < sub.n_cols; ++j) {
          if (std::isfinite(sub.at(i, j)) && !(loo && sub.col_ids[j] == sub.row_ids[i])) ++finite;
        }
        if (finite) sources.push_back(sub.row_ids[i]);
      }
      if (sources.size() < sub.n_rows) {
        spdlog::warn("{}: {} source documents without a finite neighbour skipped", d.name,
                     sub.n_rows - sources.size());
      }
      const auto pairs = nearest_neighbor_pairs(sub.select(sources, fold.train), cfg.neighbors);
      const auto h = transport_histogram(pairs, res, cfg.bin_width, cfg.workers);
      auto hist = open_output(cfg.out / (d.name + "-histogram.csv"));
      hist << "bin_lo,bin_hi,mass\n";
      for (std::size_t b = 0; b < h.masses.size(); ++b) {
        hist << g17(h.bin_edges[b]) << ',' << g17(h.bin_edges[b + 1]) << ',' << g17(h.masses[b]) << '\n';
      }
      spdlog::info("{}: histogram over {} nearest-neighbour pairs", d.name, pairs.size());

      const auto scatter_seed = derive_seed(cfg.seed, 1000);
      s.record_seed(d.name + "/scatter", scatter_seed);
      const auto sample = sample_pairs(usable_ids(res), cfg.pairs, scatter_seed);
      const auto sc = wmd_bow_scatter(sample, res, res.store(), false, cfg.workers);
      auto scsv = open_output(cfg.out / (d.name + "-scatter.csv"));
      scsv << "bow_l1l1,wmd\n";
      for (std::size_t i = 0; i < sample.size(); ++i) scsv << g17(sc.bow_l1l1[i]) << ',' << g17(sc.wmd[i]) << '\n';
      const double r = pearson(sc.bow_l1l1, sc.wmd);
      write_json(cfg.out / (d.name + "-scatter.json"),
                 {{"pearson", r}, {"pairs", sample.size()}, {"seed", scatter_seed}});
      spdlog::info("{}: Pearson(WMD, BOW L1/L1) = {:.4f} over {} pairs", d.name, r, sample.size());

      if (!cfg.dims.empty()) {
        const auto dims_seed = derive_seed(cfg.seed, 1001);
        s.record_seed(d.name + "/dims", dims_seed);
        DimComparisonOptions opt;
        opt.renormalize = cfg.renormalize;
        opt.workers = cfg.workers;
        const auto rows = dim_comparison(res.corpus(), *res.store(), cfg.dims, cfg.pairs, dims_seed, opt);
        auto dcsv = open_output(cfg.out / (d.name + "-dims.csv"));
        dcsv << "dim,pearson,pairs\n";
        for (const auto& row : rows) {
          dcsv << row.dim << ',' << g17(row.pearson) << ',' << row.pairs << '\n';
          spdlog::info("{}: d = {}: Pearson {:.4f}", d.name, row.dim, row.pearson);
        }
      }
    }
  });
}

void cmd_project(const RunConfig& cfg) {
  Session s(cfg, "project");
  with_manifest(s, [&] {
    if (cfg.dims.empty()) throw Error(ErrorCode::InvalidInput, "--dims is required for 'project'");
    std::vector<std::string> fit;
    if (!cfg.datasets.empty()) {
      auto datasets = s.load_datasets(false);
      std::unordered_set<std::string> seen;
      for (const auto& d : datasets) {
        for (const auto& doc : d.corpus.documents) {
          for (const auto& t : doc.tokens) {
            if (seen.insert(t).second) fit.push_back(t);
          }
        }
      }
    }
    const auto& store = s.store("for 'project'", true);
    if (cfg.datasets.empty()) {
      fit = store.words();
    } else {
      std::erase_if(fit, [&](const std::string& w) { return !store.contains(w); });
      std::sort(fit.begin(), fit.end());
    }
    const auto ext = cfg.format == EmbeddingFormat::Text ? ".txt" : ".bin";
    for (auto d : cfg.dims) {
      auto reduced = project_pca(store, d, fit);
      if (cfg.renormalize) reduced = l2_normalize(reduced);
      const auto path = cfg.out / (cfg.embeddings.stem().string() + "-pca" + std::to_string(d) + ext);
      fs::create_directories(cfg.out);
      save_embeddings(reduced, path, cfg.format);
      spdlog::info("wrote {} ({} words, fitted on {})", path.string(), reduced.size(), fit.size());
    }
  });
}

}  // namespace wmdlab::cli
