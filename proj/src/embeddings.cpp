#include "wmdlab/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <Eigen/Dense>

#include "wmdlab/error.hpp"

namespace wmdlab {

std::optional<std::size_t> EmbeddingStore::index(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::span<const double> EmbeddingStore::vector(std::string_view word) const {
  auto i = index(word);
  if (!i) throw Error(ErrorCode::MissingWord, "word '" + std::string(word) + "' not in embeddings");
  return row(*i);
}

bool EmbeddingStore::add(const std::string& word, std::span<const double> v) {
  if (v.size() != dim_) {
    throw Error(ErrorCode::DimMismatch, "vector for '" + word + "' has length " +
                                            std::to_string(v.size()) + ", expected " +
                                            std::to_string(dim_));
  }
  auto [it, inserted] = index_.try_emplace(word, words_.size());
  if (!inserted) return false;
  words_.push_back(word);
  data_.insert(data_.end(), v.begin(), v.end());
  return true;
}

std::string_view to_string(EmbeddingFormat f) noexcept {
  return f == EmbeddingFormat::Text ? "text" : "word2vec-binary";
}

EmbeddingFormat parse_embedding_format(std::string_view text) {
  if (text == "text") return EmbeddingFormat::Text;
  if (text == "word2vec-binary") return EmbeddingFormat::Word2VecBinary;
  throw Error(ErrorCode::InvalidInput, "unknown embedding format '" + std::string(text) + "'");
}

namespace {

[[noreturn]] void parse_error(const std::filesystem::path& path, std::uint64_t offset,
                              const std::string& what) {
  throw Error(ErrorCode::ParseError,
              path.string() + ": byte " + std::to_string(offset) + ": " + what);
}

struct Field {
  std::string_view text;
  std::size_t pos;  // offset within the line
};

std::vector<Field> split_fields(std::string_view line) {
  std::vector<Field> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back({line.substr(start, i - start), start});
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

EmbeddingStore load_text(const std::filesystem::path& path, std::istream& in,
                         const std::unordered_set<std::string>* keep) {
  std::unique_ptr<EmbeddingStore> store;
  std::optional<std::size_t> header_dim;
  std::string line;
  std::vector<double> values;
  std::uint64_t offset = 0;
  bool first = true;
  while (std::getline(in, line)) {
    const std::uint64_t line_start = offset;
    offset += line.size() + 1;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    const auto fields = split_fields(view);
    if (fields.empty()) continue;
    if (first) {
      first = false;
      std::size_t count = 0, dim = 0;
      if (fields.size() == 2 && parse_number(fields[0].text, count) &&
          parse_number(fields[1].text, dim)) {
        if (dim == 0) parse_error(path, line_start, "header declares dimension 0");
        header_dim = dim;
        store = std::make_unique<EmbeddingStore>(dim);
        continue;
      }
    }
    if (fields.size() < 2) parse_error(path, line_start, "record without values");
    const std::size_t dim = fields.size() - 1;
    if (!store) store = std::make_unique<EmbeddingStore>(dim);
    if (dim != store->dim()) {
      throw Error(ErrorCode::DimMismatch,
                  path.string() + ": byte " + std::to_string(line_start) + ": vector has " +
                      std::to_string(dim) + " values, expected " + std::to_string(store->dim()));
    }
    values.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto& f = fields[k + 1];
      if (!parse_number(f.text, values[k]) || !std::isfinite(values[k])) {
        parse_error(path, line_start + f.pos, "bad number '" + std::string(f.text) + "'");
      }
    }
    std::string word(fields[0].text);
    if (!keep || keep->count(word)) store->add(word, values);
  }
  if (!store) return EmbeddingStore(header_dim.value_or(0));
  return std::move(*store);
}

EmbeddingStore load_binary(const std::filesystem::path& path, std::istream& in,
                           const std::unordered_set<std::string>* keep) {
  std::string header;
  if (!std::getline(in, header)) parse_error(path, 0, "missing header");
  std::uint64_t offset = header.size() + 1;
  const auto fields = split_fields(header);
  std::size_t count = 0, dim = 0;
  if (fields.size() != 2 || !parse_number(fields[0].text, count) ||
      !parse_number(fields[1].text, dim) || dim == 0) {
    parse_error(path, 0, "header must be 'count dim'");
  }
  EmbeddingStore store(dim);
  std::vector<char> raw(dim * sizeof(float));
  std::vector<double> values(dim);
  std::string word;
  for (std::size_t r = 0; r < count; ++r) {
    int c = in.get();
    while (c == '\n') {
      ++offset;
      c = in.get();
    }
    const std::uint64_t record_start = offset;
    word.clear();
    while (c != std::char_traits<char>::eof() && c != ' ') {
      word.push_back(static_cast<char>(c));
      c = in.get();
    }
    if (c == std::char_traits<char>::eof()) {
      parse_error(path, record_start, "truncated record " + std::to_string(r));
    }
    if (word.empty()) parse_error(path, record_start, "empty token");
    offset += word.size() + 1;
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      parse_error(path, record_start, "truncated vector for '" + word + "'");
    }
    offset += raw.size();
    for (std::size_t k = 0; k < dim; ++k) {
      std::uint32_t bits;
      std::memcpy(&bits, raw.data() + k * sizeof(float), sizeof bits);
      if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
      const float f = std::bit_cast<float>(bits);
      if (!std::isfinite(f)) parse_error(path, record_start, "non-finite value for '" + word + "'");
      values[k] = f;
    }
    if (!keep || keep->count(word)) store.add(word, values);
  }
  return store;
}

}  // namespace

EmbeddingStore load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                               const std::unordered_set<std::string>* keep) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return format == EmbeddingFormat::Text ? load_text(path, in, keep)
                                         : load_binary(path, in, keep);
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path,
                     EmbeddingFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << store.size() << ' ' << store.dim() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < store.size(); ++i) {
    out << store.words()[i];
    const auto v = store.row(i);
    if (format == EmbeddingFormat::Text) {
      for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        out << ' ' << buf;
      }
    } else {
      out << ' ';
      for (double x : v) {
        auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(x));
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
      }
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

EmbeddingStore l2_normalize(const EmbeddingStore& store) {
  EmbeddingStore out(store.dim());
  std::vector<double> v(store.dim());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto r = store.row(i);
    double ss = 0.0;
    for (double x : r) ss += x * x;
    if (ss == 0.0) {
      throw Error(ErrorCode::ZeroVector, "zero embedding for '" + store.words()[i] + "'");
    }
    const double norm = std::sqrt(ss);
    for (std::size_t k = 0; k < r.size(); ++k) v[k] = r[k] / norm;
    out.add(store.words()[i], v);
  }
  out.set_normalized(true);
  return out;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double ss = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    ss += d * d;
  }
  return std::sqrt(ss);
}

Matrix cost_submatrix(const EmbeddingStore& store, std::span<const std::size_t> src_rows,
                      std::span<const std::size_t> dst_rows) {
  Matrix c(src_rows.size(), dst_rows.size());
  for (std::size_t i = 0; i < src_rows.size(); ++i) {
    const auto a = store.row(src_rows[i]);
    for (std::size_t j = 0; j < dst_rows.size(); ++j) {
      double d = src_rows[i] == dst_rows[j] ? 0.0 : euclidean(a, store.row(dst_rows[j]));
      // Unit vectors are at most 2 apart; rounding can overshoot by an ulp.
      if (store.normalized()) d = std::min(d, 2.0);
      c(i, j) = d;
    }
  }
  return c;
}

Matrix cost_submatrix(const EmbeddingStore& store, std::span<const std::string> src,
                      std::span<const std::string> dst) {
  auto rows_of = [&](std::span<const std::string> words) {
    std::vector<std::size_t> rows;
    rows.reserve(words.size());
    for (const auto& w : words) {
      auto i = store.index(w);
      if (!i) throw Error(ErrorCode::MissingWord, "word '" + w + "' not in embeddings");
      rows.push_back(*i);
    }
    return rows;
  };
  return cost_submatrix(store, rows_of(src), rows_of(dst));
}

PcaBasis fit_pca(const EmbeddingStore& store, std::size_t target_dim,
                 std::span<const std::string> fit_vocab) {
  const std::size_t d = store.dim();
  if (target_dim < 1 || target_dim > d) {
    throw Error(ErrorCode::InvalidInput, "target dimension " + std::to_string(target_dim) +
                                             " outside [1, " + std::to_string(d) + "]");
  }
  std::vector<std::size_t> rows;
  std::unordered_set<std::size_t> seen;
  for (const auto& w : fit_vocab) {
    auto i = store.index(w);
    if (!i) throw Error(ErrorCode::MissingWord, "word '" + w + "' not in embeddings");
    if (seen.insert(*i).second) rows.push_back(*i);
  }
  if (rows.size() < target_dim) {
    throw Error(ErrorCode::InvalidInput, "need at least " + std::to_string(target_dim) +
                                             " fit words, got " + std::to_string(rows.size()));
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd x(n, dd);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto v = store.row(rows[static_cast<std::size_t>(r)]);
    for (Eigen::Index k = 0; k < dd; ++k) x(r, k) = v[static_cast<std::size_t>(k)];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::RankDeficient, "eigendecomposition did not converge");
  }
  const auto& lambda = eig.eigenvalues();  // ascending
  const double top = std::max(lambda(dd - 1), 0.0);
  const double tol = top * 1e-10;
  std::size_t rank = 0;
  for (Eigen::Index k = 0; k < dd; ++k) rank += (top > 0.0 && lambda(k) > tol) ? 1 : 0;
  if (rank < target_dim) {
    throw Error(ErrorCode::RankDeficient, "fit words span " + std::to_string(rank) +
                                              " dimensions, need " + std::to_string(target_dim));
  }

  PcaBasis basis;
  basis.mean.assign(mean.data(), mean.data() + dd);
  basis.components = Matrix(target_dim, d);
  for (std::size_t c = 0; c < target_dim; ++c) {
    const Eigen::Index src = dd - 1 - static_cast<Eigen::Index>(c);
    auto col = eig.eigenvectors().col(src);
    Eigen::Index pivot = 0;
    for (Eigen::Index k = 1; k < dd; ++k) {
      if (std::abs(col(k)) > std::abs(col(pivot))) pivot = k;
    }
    const double sign = col(pivot) < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index k = 0; k < dd; ++k) {
      basis.components(c, static_cast<std::size_t>(k)) = sign * col(k);
    }
    basis.variances.push_back(lambda(src));
  }
  return basis;
}

EmbeddingStore project_pca(const EmbeddingStore& store, std::size_t target_dim,
                           std::span<const std::string> fit_vocab) {
  const auto basis = fit_pca(store, target_dim, fit_vocab);
  EmbeddingStore out(target_dim);
  std::vector<double> centred(store.dim()), projected(target_dim);
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto v = store.row(i);
    for (std::size_t k = 0; k < v.size(); ++k) centred[k] = v[k] - basis.mean[k];
    for (std::size_t c = 0; c < target_dim; ++c) {
      const auto axis = basis.components.row(c);
      double s = 0.0;
      for (std::size_t k = 0; k < centred.size(); ++k) s += axis[k] * centred[k];
      projected[c] = s;
    }
    out.add(store.words()[i], projected);
  }
  return out;
}

}  // namespace wmdlab
