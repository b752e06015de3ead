#include "wmdlab/wmd.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <unordered_map>

#include <omp.h>

#include "wmdlab/error.hpp"

namespace wmdlab {

DocumentMeasure make_measure(const TokenList& doc, Weighting weighting, const Vocabulary& vocab,
                             const DocumentFrequencies* stats) {
  SparseVector raw;
  if (weighting == Weighting::TfIdf) {
    if (!stats) throw Error(ErrorCode::InvalidInput, "tf-idf weighting needs document frequencies");
    raw = tfidf_vector(doc, vocab, *stats);
  } else {
    raw = bow_vector(doc, vocab).counts;
  }
  if (raw.empty()) throw Error(ErrorCode::EmptySupport, "document has no usable words");
  const auto p = normalize(raw, NormScheme::L1);
  DocumentMeasure m;
  m.words.reserve(p.nnz());
  m.weights.reserve(p.nnz());
  for (const auto& e : p.entries()) {
    m.words.push_back(vocab.word(e.id));
    m.weights.push_back(e.value);
  }
  return m;
}

WmdSolution wmd_solve(const DocumentMeasure& a, const DocumentMeasure& b,
                      const EmbeddingStore& store) {
  WmdSolution s;
  s.cost = cost_submatrix(store, a.words, b.words);
  s.plan = solve_transport(TransportProblem{a.weights, b.weights, s.cost});
  return s;
}

double wmd_distance(const DocumentMeasure& a, const DocumentMeasure& b,
                    const EmbeddingStore& store) {
  return wmd_solve(a, b, store).plan.objective;
}

std::string Method::tag() const {
  switch (kind) {
    case MethodKind::Wmd: return "wmd";
    case MethodKind::WmdTfidf: return "wmd-tfidf";
    case MethodKind::Bow:
    case MethodKind::Tfidf:
      return std::string(kind == MethodKind::Bow ? "bow-" : "tfidf-") +
             std::string(to_string(norm)) + "-" + std::string(to_string(metric));
  }
  return "?";
}

std::string Method::label() const {
  auto upper = [](std::string_view s) {
    if (s == "none") return std::string("None");
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
  };
  switch (kind) {
    case MethodKind::Wmd: return "WMD";
    case MethodKind::WmdTfidf: return "WMD-TF-IDF";
    case MethodKind::Bow:
    case MethodKind::Tfidf:
      return std::string(kind == MethodKind::Bow ? "BOW (" : "TF-IDF (") +
             upper(to_string(norm)) + "/" + upper(to_string(metric)) + ")";
  }
  return "?";
}

Method Method::parse(std::string_view text, NormScheme default_norm,
                     VectorMetric default_metric) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == '/' || c == '-') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  parts.push_back(cur);
  auto fail = [&]() -> Method {
    throw Error(ErrorCode::InvalidInput, "unknown method '" + std::string(text) + "'");
  };
  Method m;
  if (parts.size() == 1 && parts[0] == "wmd") return m;
  if (parts.size() == 2 && parts[0] == "wmd" && parts[1] == "tfidf") {
    m.kind = MethodKind::WmdTfidf;
    return m;
  }
  if (parts[0] == "bow") m.kind = MethodKind::Bow;
  else if (parts[0] == "tfidf") m.kind = MethodKind::Tfidf;
  else return fail();
  if (parts.size() == 1) {
    m.norm = default_norm;
    m.metric = default_metric;
  } else if (parts.size() == 3) {
    m.norm = parse_norm(parts[1]);
    m.metric = parse_metric(parts[2]);
  } else {
    return fail();
  }
  return m;
}

DistanceMatrix DistanceMatrix::select(const std::vector<std::size_t>& rows,
                                      const std::vector<std::size_t>& cols) const {
  auto positions = [](const std::vector<std::size_t>& ids) {
    std::unordered_map<std::size_t, std::size_t> pos;
    for (std::size_t i = 0; i < ids.size(); ++i) pos.emplace(ids[i], i);
    return pos;
  };
  const auto rp = positions(row_ids), cp = positions(col_ids);
  auto find = [](const auto& pos, std::size_t id, const char* what) {
    auto it = pos.find(id);
    if (it == pos.end()) {
      throw Error(ErrorCode::InvalidInput,
                  std::string("document ") + std::to_string(id) + " is not a " + what);
    }
    return it->second;
  };
  DistanceMatrix out;
  out.n_rows = rows.size();
  out.n_cols = cols.size();
  out.row_ids = rows;
  out.col_ids = cols;
  out.values.resize(out.n_rows * out.n_cols);
  std::vector<std::size_t> cj(cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) cj[j] = find(cp, cols[j], "column");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = find(rp, rows[i], "row");
    for (std::size_t j = 0; j < cols.size(); ++j) out.values[i * out.n_cols + j] = at(src, cj[j]);
  }
  return out;
}

void write_distance_matrix(const DistanceMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << m.n_rows << ' ' << m.n_cols << '\n';
  auto ids = [&](const std::vector<std::size_t>& v) {
    for (std::size_t k = 0; k < v.size(); ++k) out << (k ? " " : "") << v[k];
    out << '\n';
  };
  ids(m.row_ids);
  ids(m.col_ids);
  char buf[32];
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    for (std::size_t j = 0; j < m.n_cols; ++j) {
      const double v = m.at(i, j);
      if (std::isinf(v)) {
        out << (j ? " " : "") << "inf";
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << (j ? " " : "") << buf;
      }
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

namespace {

[[noreturn]] void cache_error(const std::filesystem::path& path, std::size_t line,
                              const std::string& what) {
  throw Error(ErrorCode::ParseError,
              path.string() + ": line " + std::to_string(line) + ": " + what);
}

std::vector<std::string_view> split_spaces(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <class T>
bool parse_exact(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

DistanceMatrix read_distance_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  DistanceMatrix m;
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> std::vector<std::string_view> {
    if (!std::getline(in, line)) cache_error(path, lineno + 1, "unexpected end of file");
    ++lineno;
    return split_spaces(line);
  };
  auto f = next_line();
  if (f.size() != 2 || !parse_exact(f[0], m.n_rows) || !parse_exact(f[1], m.n_cols)) {
    cache_error(path, lineno, "expected 'n_rows n_cols'");
  }
  auto read_ids = [&](std::size_t n, std::vector<std::size_t>& ids) {
    const auto fields = next_line();
    if (fields.size() != n) cache_error(path, lineno, "expected " + std::to_string(n) + " ids");
    ids.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      if (!parse_exact(fields[k], ids[k])) cache_error(path, lineno, "bad id");
    }
  };
  read_ids(m.n_rows, m.row_ids);
  read_ids(m.n_cols, m.col_ids);
  m.values.resize(m.n_rows * m.n_cols);
  for (std::size_t i = 0; i < m.n_rows; ++i) {
    const auto fields = next_line();
    if (fields.size() != m.n_cols) {
      cache_error(path, lineno, "expected " + std::to_string(m.n_cols) + " values");
    }
    for (std::size_t j = 0; j < m.n_cols; ++j) {
      double v = 0.0;
      if (fields[j] == "inf") {
        v = kUnusable;
      } else if (!parse_exact(fields[j], v) || !std::isfinite(v) || v < 0.0) {
        cache_error(path, lineno, "bad value '" + std::string(fields[j]) + "'");
      }
      m.values[i * m.n_cols + j] = v;
    }
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (!split_spaces(line).empty()) cache_error(path, lineno, "trailing data");
  }
  return m;
}

DistanceResources::DistanceResources(Corpus corpus, const EmbeddingStore* store)
    : corpus_(std::move(corpus)), store_(store) {
  const auto docs = corpus_.token_lists();
  vocab_ = build_vocabulary(docs);
  stats_ = document_frequencies(docs, vocab_);
}

DocumentMeasure DistanceResources::measure(std::size_t id, Weighting weighting) const {
  return make_measure(corpus_.by_id(id).tokens, weighting, vocab_, &stats_);
}

SparseVector DistanceResources::vector(std::size_t id, MethodKind kind, NormScheme norm) const {
  const auto& tokens = corpus_.by_id(id).tokens;
  SparseVector v = kind == MethodKind::Tfidf ? tfidf_vector(tokens, vocab_, stats_)
                                             : bow_vector(tokens, vocab_).counts;
  if (v.empty()) return v;
  return normalize(v, norm);
}

namespace {

struct Prepared {
  bool usable = false;
  std::vector<std::size_t> rows;  // embedding rows of the measure's words
  std::vector<double> weights;
  SparseVector vec;
};

class PairwiseJob {
 public:
  PairwiseJob(const std::vector<std::size_t>& queries, const std::vector<std::size_t>& refs,
              const Method& method, const DistanceResources& res)
      : queries_(queries), refs_(refs), method_(method), res_(res) {
    if (method.uses_embeddings() && !res.store()) {
      throw Error(ErrorCode::InvalidInput, method.label() + " needs word embeddings");
    }
    for (auto id : queries) add_id(id);
    for (auto id : refs) add_id(id);
  }

  std::size_t n_docs() const { return ids_.size(); }

  void prepare(std::size_t k) {
    const std::size_t id = ids_[k];
    Prepared p;
    if (method_.uses_embeddings()) {
      const auto weighting =
          method_.kind == MethodKind::WmdTfidf ? Weighting::TfIdf : Weighting::UniformCount;
      try {
        const auto m = res_.measure(id, weighting);
        for (const auto& w : m.words) {
          auto row = res_.store()->index(w);
          if (!row) throw Error(ErrorCode::MissingWord, "word '" + w + "' not in embeddings");
          p.rows.push_back(*row);
        }
        p.weights = m.weights;
        p.usable = true;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptySupport) throw;
      }
    } else {
      p.vec = res_.vector(id, method_.kind, method_.norm);
      p.usable = !p.vec.empty();
    }
    prepared_[k] = std::move(p);
  }

  double cell(std::size_t q, std::size_t r) const {
    const auto& a = prepared_[slot_.at(q)];
    const auto& b = prepared_[slot_.at(r)];
    if (!a.usable || !b.usable) return kUnusable;
    if (q == r) return 0.0;
    if (!method_.uses_embeddings()) return vector_distance(a.vec, b.vec, method_.metric);
    const auto cost = cost_submatrix(*res_.store(), a.rows, b.rows);
    return solve_transport(TransportProblem{a.weights, b.weights, cost}).objective;
  }

  PairwiseResult start_result() const {
    PairwiseResult out;
    out.matrix.n_rows = queries_.size();
    out.matrix.n_cols = refs_.size();
    out.matrix.row_ids = queries_;
    out.matrix.col_ids = refs_;
    out.matrix.values.assign(queries_.size() * refs_.size(), 0.0);
    for (std::size_t k = 0; k < ids_.size(); ++k) {
      if (!prepared_[k].usable) out.unusable.push_back(ids_[k]);
    }
    std::sort(out.unusable.begin(), out.unusable.end());
    return out;
  }

 private:
  void add_id(std::size_t id) {
    if (slot_.emplace(id, ids_.size()).second) {
      ids_.push_back(id);
      prepared_.emplace_back();
    }
  }

  const std::vector<std::size_t>& queries_;
  const std::vector<std::size_t>& refs_;
  Method method_;
  const DistanceResources& res_;
  std::vector<std::size_t> ids_;
  std::unordered_map<std::size_t, std::size_t> slot_;
  std::vector<Prepared> prepared_;
};

/// Runs body(i) for i in [0, n) on `workers` threads and rethrows the
/// exception of the lowest failing index.
template <class Body>
void parallel_for(std::size_t n, int workers, Body body) {
  std::exception_ptr error;
  std::size_t error_at = n;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(wmdlab_parallel_error)
      {
        if (static_cast<std::size_t>(i) < error_at) {
          error_at = static_cast<std::size_t>(i);
          error = std::current_exception();
        }
      }
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

PairwiseResult pairwise_distances(const std::vector<std::size_t>& queries,
                                  const std::vector<std::size_t>& refs, const Method& method,
                                  const DistanceResources& resources, int workers) {
  if (workers <= 0) workers = omp_get_max_threads();
  PairwiseJob job(queries, refs, method, resources);
  parallel_for(job.n_docs(), workers, [&](std::size_t k) { job.prepare(k); });
  auto out = job.start_result();

  std::unordered_map<std::size_t, std::size_t> row_pos, col_pos;
  for (std::size_t i = 0; i < queries.size(); ++i) row_pos.emplace(queries[i], i);
  for (std::size_t j = 0; j < refs.size(); ++j) col_pos.emplace(refs[j], j);
  // Cell (q, r) with q > r is copied from (r, q) when that cell exists too.
  auto mirrored = [&](std::size_t q, std::size_t r) {
    return q > r && row_pos.count(r) && col_pos.count(q);
  };

  auto& values = out.matrix.values;
  const std::size_t n_cols = refs.size();
  parallel_for(queries.size(), workers, [&](std::size_t i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (!mirrored(queries[i], refs[j])) values[i * n_cols + j] = job.cell(queries[i], refs[j]);
    }
  });
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      if (mirrored(queries[i], refs[j])) {
        values[i * n_cols + j] = values[row_pos.at(refs[j]) * n_cols + col_pos.at(queries[i])];
      }
    }
  }
  return out;
}

PairwiseResult pairwise_distances_serial(const std::vector<std::size_t>& queries,
                                         const std::vector<std::size_t>& refs,
                                         const Method& method,
                                         const DistanceResources& resources) {
  PairwiseJob job(queries, refs, method, resources);
  for (std::size_t k = 0; k < job.n_docs(); ++k) job.prepare(k);
  auto out = job.start_result();
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < refs.size(); ++j) {
      out.matrix.values[i * refs.size() + j] = job.cell(queries[i], refs[j]);
    }
  }
  return out;
}

}  // namespace wmdlab
