#include "wmdlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "wmdlab/error.hpp"
#include "wmdlab/random.hpp"

namespace wmdlab {

namespace fs = std::filesystem;

std::string_view to_string(SplitType s) noexcept {
  switch (s) {
    case SplitType::OneFold: return "one-fold";
    case SplitType::FiveFold: return "five-fold";
    case SplitType::Unspecified: break;
  }
  return "unspecified";
}

const Document& Corpus::by_id(std::size_t id) const {
  auto it = position_.find(id);
  if (it == position_.end() || it->second >= documents.size() ||
      documents[it->second].id != id) {
    throw Error(ErrorCode::InvalidInput, "unknown document id " + std::to_string(id));
  }
  return documents[it->second];
}

bool Corpus::contains(std::size_t id) const {
  auto it = position_.find(id);
  return it != position_.end() && it->second < documents.size() &&
         documents[it->second].id == id;
}

std::vector<std::string> Corpus::labels() const {
  std::set<std::string> s;
  for (const auto& d : documents) s.insert(d.label);
  return {s.begin(), s.end()};
}

std::vector<TokenList> Corpus::token_lists() const {
  std::vector<TokenList> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(d.tokens);
  return out;
}

void Corpus::reindex() {
  position_.clear();
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (!position_.emplace(documents[i].id, i).second) {
      throw Error(ErrorCode::InvalidInput, "duplicate document id " +
                                               std::to_string(documents[i].id));
    }
  }
}

namespace {

fs::path sidecar(const fs::path& path, const std::string& suffix) {
  return fs::path(path.string() + suffix);
}

fs::path fold_path(const fs::path& path, std::size_t k) {
  return sidecar(path, ".fold" + std::to_string(k));
}

[[noreturn]] void parse_error(const fs::path& path, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError,
              path.string() + ": line " + std::to_string(line) + ": " + what);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

TokenList split_tokens(std::string_view text) {
  TokenList out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < text.size() && text[i] != ' ') ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

SplitType parse_split(const fs::path& path, std::size_t line, const std::string& v) {
  if (v == "one-fold") return SplitType::OneFold;
  if (v == "five-fold") return SplitType::FiveFold;
  if (v == "unspecified") return SplitType::Unspecified;
  parse_error(path, line, "unknown split type '" + v + "'");
}

std::vector<std::size_t> parse_ids(const fs::path& path, std::size_t line,
                                   const std::string& text, std::size_t n_docs) {
  std::vector<std::size_t> ids;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != tok.size() || tok[0] == '-') parse_error(path, line, "bad id '" + tok + "'");
    if (v >= n_docs) parse_error(path, line, "id " + tok + " out of range");
    ids.push_back(static_cast<std::size_t>(v));
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    parse_error(path, line, "repeated id");
  }
  return ids;
}

Fold load_fold(const fs::path& path, std::size_t n_docs) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Fold fold;
  bool have_train = false, have_test = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) parse_error(path, lineno, "expected 'train:' or 'test:'");
    const std::string key = line.substr(0, colon);
    auto ids = parse_ids(path, lineno, line.substr(colon + 1), n_docs);
    if (key == "train" && !have_train) {
      fold.train = std::move(ids);
      have_train = true;
    } else if (key == "test" && !have_test) {
      fold.test = std::move(ids);
      have_test = true;
    } else {
      parse_error(path, lineno, "unexpected key '" + key + "'");
    }
  }
  if (!have_train || !have_test) parse_error(path, lineno, "fold needs train and test lines");
  std::vector<std::size_t> both;
  std::set_intersection(fold.train.begin(), fold.train.end(), fold.test.begin(), fold.test.end(),
                        std::back_inserter(both));
  if (!both.empty()) {
    parse_error(path, lineno, "id " + std::to_string(both.front()) + " in train and test");
  }
  return fold;
}

void write_ids(std::ostream& out, const char* key, const std::vector<std::size_t>& ids,
               const std::unordered_map<std::size_t, std::size_t>& renumber) {
  out << key << ':';
  std::vector<std::size_t> mapped;
  for (auto id : ids) mapped.push_back(renumber.at(id));
  std::sort(mapped.begin(), mapped.end());
  for (auto id : mapped) out << ' ' << id;
  out << '\n';
}

std::string content_key(const TokenList& tokens) {
  TokenList sorted = tokens;
  std::sort(sorted.begin(), sorted.end());
  std::string key;
  for (const auto& t : sorted) {
    key += t;
    key += ' ';
  }
  return key;
}

std::unordered_map<std::size_t, std::size_t> train_counts(const Corpus& corpus) {
  std::unordered_map<std::size_t, std::size_t> counts;
  for (const auto& f : corpus.folds)
    for (auto id : f.train) ++counts[id];
  return counts;
}

}  // namespace

Corpus load_corpus(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  Corpus corpus;
  corpus.name = path.stem().string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    const auto tab = line.find('\t');
    if (tab == std::string::npos) parse_error(path, lineno, "missing TAB after label");
    Document doc;
    doc.id = lineno - 1;
    doc.label = line.substr(0, tab);
    if (doc.label.empty()) parse_error(path, lineno, "empty label");
    doc.tokens = split_tokens(std::string_view(line).substr(tab + 1));
    corpus.documents.push_back(std::move(doc));
  }
  corpus.reindex();

  const auto meta = sidecar(path, ".meta");
  if (fs::exists(meta)) {
    std::ifstream m(meta);
    std::size_t mline = 0;
    while (std::getline(m, line)) {
      ++mline;
      strip_cr(line);
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) parse_error(meta, mline, "expected key=value");
      const auto key = line.substr(0, eq), value = line.substr(eq + 1);
      if (key == "name") corpus.name = value;
      else if (key == "split") corpus.split = parse_split(meta, mline, value);
      else parse_error(meta, mline, "unknown key '" + key + "'");
    }
  }

  const std::size_t n = corpus.documents.size();
  if (corpus.split == SplitType::FiveFold) {
    for (std::size_t k = 0; k < 5; ++k) {
      const auto fp = fold_path(path, k);
      if (!fs::exists(fp)) {
        throw Error(ErrorCode::MissingFoldFile, "five-fold corpus lacks " + fp.string());
      }
      corpus.folds.push_back(load_fold(fp, n));
    }
  } else {
    for (std::size_t k = 0; fs::exists(fold_path(path, k)); ++k) {
      corpus.folds.push_back(load_fold(fold_path(path, k), n));
      if (corpus.split == SplitType::OneFold) break;
    }
  }
  return corpus;
}

void write_corpus(const Corpus& corpus, const fs::path& path) {
  std::unordered_map<std::size_t, std::size_t> renumber;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    renumber.emplace(corpus.documents[i].id, i);
  }
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (const auto& d : corpus.documents) {
      if (d.label.find_first_of("\t\n") != std::string::npos) {
        throw Error(ErrorCode::InvalidInput, "label of document " + std::to_string(d.id) +
                                                 " contains TAB or LF");
      }
      out << d.label << '\t';
      for (std::size_t t = 0; t < d.tokens.size(); ++t) out << (t ? " " : "") << d.tokens[t];
      out << '\n';
    }
  }
  {
    std::ofstream meta(sidecar(path, ".meta"), std::ios::binary);
    meta << "name=" << corpus.name << "\nsplit=" << to_string(corpus.split) << '\n';
  }
  for (std::size_t k = 0; k < corpus.folds.size(); ++k) {
    std::ofstream out(fold_path(path, k), std::ios::binary);
    write_ids(out, "train", corpus.folds[k].train, renumber);
    write_ids(out, "test", corpus.folds[k].test, renumber);
  }
  for (std::size_t k = corpus.folds.size(); fs::exists(fold_path(path, k)); ++k) {
    fs::remove(fold_path(path, k));
  }
}

std::unordered_set<std::string> load_stopwords(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::unordered_set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    for (auto& t : split_tokens(line)) out.insert(std::move(t));
  }
  return out;
}

Corpus filter_vocabulary(const Corpus& corpus, const EmbeddingStore* store,
                         const std::unordered_set<std::string>* stopwords, bool keep_oov) {
  if (!keep_oov && !store) {
    throw Error(ErrorCode::InvalidInput, "vocabulary filtering needs embeddings unless keep_oov");
  }
  Corpus out = corpus;
  for (auto& d : out.documents) {
    std::erase_if(d.tokens, [&](const std::string& t) {
      return (stopwords && stopwords->count(t)) || (!keep_oov && !store->contains(t));
    });
  }
  return out;
}

DuplicateReport find_duplicates(const Corpus& corpus) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (const auto& d : corpus.documents) {
    if (d.tokens.empty()) continue;
    groups[content_key(d.tokens)].push_back(d.id);
  }
  DuplicateReport report;
  for (auto& [key, ids] : groups) {
    if (ids.size() < 2) continue;
    std::sort(ids.begin(), ids.end());
    report.classes.push_back(ids);
  }
  std::sort(report.classes.begin(), report.classes.end());

  std::vector<std::pair<std::set<std::size_t>, std::set<std::size_t>>> sides;
  for (const auto& f : corpus.folds) {
    sides.emplace_back(std::set<std::size_t>(f.train.begin(), f.train.end()),
                       std::set<std::size_t>(f.test.begin(), f.test.end()));
  }
  auto crosses = [&](std::size_t a, std::size_t b) {
    for (const auto& [train, test] : sides) {
      if ((train.count(a) && test.count(b)) || (test.count(a) && train.count(b))) return true;
    }
    return false;
  };

  std::set<std::size_t> samples;
  for (const auto& cls : report.classes) {
    for (std::size_t i = 0; i < cls.size(); ++i) {
      samples.insert(cls[i]);
      for (std::size_t j = i + 1; j < cls.size(); ++j) {
        const IdPair p{cls[i], cls[j]};
        report.pairs.push_back(p);
        if (crosses(p.first, p.second)) report.cross_split.push_back(p);
        if (corpus.by_id(p.first).label != corpus.by_id(p.second).label) {
          report.conflicting.push_back(p);
        }
      }
    }
  }
  std::sort(report.pairs.begin(), report.pairs.end());
  std::sort(report.cross_split.begin(), report.cross_split.end());
  std::sort(report.conflicting.begin(), report.conflicting.end());
  report.samples.assign(samples.begin(), samples.end());
  return report;
}

DedupResult deduplicate(const Corpus& corpus, const DuplicateReport& report,
                        bool drop_conflicting) {
  const auto in_train = train_counts(corpus);
  auto count_of = [&](std::size_t id) {
    auto it = in_train.find(id);
    return it == in_train.end() ? std::size_t{0} : it->second;
  };

  DedupResult result;
  std::set<std::size_t> removed;
  for (const auto& cls : report.classes) {
    bool conflict = false;
    for (auto id : cls) conflict = conflict || corpus.by_id(id).label != corpus.by_id(cls[0]).label;
    if (conflict && drop_conflicting) {
      for (auto id : cls) {
        removed.insert(id);
        result.removals.push_back({id, id, "conflicting labels"});
      }
      continue;
    }
    std::size_t keep = cls[0];
    for (auto id : cls) {
      if (count_of(id) > count_of(keep)) keep = id;
    }
    for (auto id : cls) {
      if (id == keep) continue;
      removed.insert(id);
      result.removals.push_back({id, keep, "duplicate of " + std::to_string(keep)});
    }
  }
  std::sort(result.removals.begin(), result.removals.end(),
            [](const Removal& a, const Removal& b) { return a.id < b.id; });

  result.corpus = corpus;
  std::erase_if(result.corpus.documents,
                [&](const Document& d) { return removed.count(d.id) > 0; });
  for (auto& f : result.corpus.folds) {
    std::erase_if(f.train, [&](std::size_t id) { return removed.count(id) > 0; });
    std::erase_if(f.test, [&](std::size_t id) { return removed.count(id) > 0; });
  }
  result.corpus.reindex();
  return result;
}

Corpus make_folds(const Corpus& corpus, std::size_t n_folds, double train_fraction,
                  std::uint64_t seed) {
  if (n_folds < 1) throw Error(ErrorCode::InvalidInput, "need at least one fold");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidInput, "train fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.documents.size();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) {
    throw Error(ErrorCode::TooSmall, std::to_string(n) + " documents cannot be split at " +
                                         std::to_string(train_fraction));
  }
  Corpus out = corpus;
  out.folds.clear();
  out.split = n_folds == 1 ? SplitType::OneFold
              : n_folds == 5 ? SplitType::FiveFold
                             : SplitType::Unspecified;
  std::vector<std::size_t> ids;
  for (const auto& d : corpus.documents) ids.push_back(d.id);
  for (std::size_t f = 0; f < n_folds; ++f) {
    std::mt19937_64 rng(derive_seed(seed, f));
    auto order = ids;
    shuffle(order, rng);
    Fold fold;
    fold.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    fold.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.test.begin(), fold.test.end());
    out.folds.push_back(std::move(fold));
  }
  return out;
}

}  // namespace wmdlab
