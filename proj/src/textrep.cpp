#include "wmdlab/textrep.hpp"

#include <cmath>
#include <string>

#include "wmdlab/error.hpp"
#include "wmdlab/numeric.hpp"

namespace wmdlab {

std::optional<WordId> Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::insert(const std::string& token) {
  auto [it, inserted] = index_.try_emplace(token, static_cast<WordId>(words_.size()));
  if (inserted) words_.push_back(token);
  return it->second;
}

Vocabulary build_vocabulary(std::span<const TokenList> documents) {
  if (documents.empty()) throw Error(ErrorCode::EmptyCorpus, "no documents to build a vocabulary");
  Vocabulary vocab;
  for (const auto& doc : documents) {
    for (const auto& token : doc) {
      if (token.empty()) throw Error(ErrorCode::InvalidInput, "empty token");
      vocab.insert(token);
    }
  }
  return vocab;
}

BowVector bow_vector(const TokenList& doc, const Vocabulary& vocab) {
  std::vector<std::pair<WordId, double>> pairs;
  pairs.reserve(doc.size());
  BowVector out;
  for (const auto& token : doc) {
    if (auto id = vocab.lookup(token)) {
      pairs.emplace_back(*id, 1.0);
    } else {
      ++out.dropped;
    }
  }
  out.counts = SparseVector::from_pairs(vocab.size(), std::move(pairs));
  return out;
}

DocumentFrequencies document_frequencies(std::span<const TokenList> documents,
                                         const Vocabulary& vocab) {
  DocumentFrequencies stats;
  stats.df.assign(vocab.size(), 0);
  stats.n_docs = documents.size();
  for (const auto& doc : documents) {
    const auto bow = bow_vector(doc, vocab);
    for (const auto& e : bow.counts.entries()) ++stats.df[e.id];
  }
  return stats;
}

SparseVector tfidf_vector(const TokenList& doc, const Vocabulary& vocab,
                          const DocumentFrequencies& stats) {
  if (stats.n_docs == 0) throw Error(ErrorCode::InvalidInput, "document frequencies over 0 docs");
  if (stats.df.size() != vocab.size()) {
    throw Error(ErrorCode::InconsistentStats, "document frequencies do not match vocabulary");
  }
  const auto counts = bow_vector(doc, vocab).counts;
  std::vector<std::pair<WordId, double>> pairs;
  pairs.reserve(counts.nnz());
  const double n = static_cast<double>(stats.n_docs);
  for (const auto& e : counts.entries()) {
    const std::size_t df = stats.df[e.id];
    if (df == 0) {
      throw Error(ErrorCode::InconsistentStats, "word '" + vocab.word(e.id) + "' has df 0");
    }
    const double idf = std::log2(n / static_cast<double>(df));
    if (idf > 0.0) pairs.emplace_back(e.id, e.value * idf);
  }
  return SparseVector::from_pairs(vocab.size(), std::move(pairs));
}

std::string_view to_string(NormScheme s) noexcept {
  switch (s) {
    case NormScheme::None: return "none";
    case NormScheme::L1: return "l1";
    case NormScheme::L2: return "l2";
  }
  return "?";
}

std::string_view to_string(VectorMetric m) noexcept {
  return m == VectorMetric::L1 ? "l1" : "l2";
}

NormScheme parse_norm(std::string_view text) {
  if (text == "none") return NormScheme::None;
  if (text == "l1") return NormScheme::L1;
  if (text == "l2") return NormScheme::L2;
  throw Error(ErrorCode::InvalidInput, "unknown normalisation '" + std::string(text) + "'");
}

VectorMetric parse_metric(std::string_view text) {
  if (text == "l1") return VectorMetric::L1;
  if (text == "l2") return VectorMetric::L2;
  throw Error(ErrorCode::InvalidInput, "unknown metric '" + std::string(text) + "'");
}

SparseVector normalize(const SparseVector& v, NormScheme scheme) {
  if (scheme == NormScheme::None) return v;
  if (v.empty()) throw Error(ErrorCode::ZeroVector, "cannot normalise an empty vector");
  double scale = 0.0;
  if (scheme == NormScheme::L1) {
    NeumaierSum s;
    for (const auto& e : v.entries()) s.add(e.value);
    scale = s.value();
  } else {
    scale = v.norm2();
  }
  std::vector<std::pair<WordId, double>> pairs;
  pairs.reserve(v.nnz());
  for (const auto& e : v.entries()) pairs.emplace_back(e.id, e.value / scale);
  return SparseVector::from_pairs(v.dim(), std::move(pairs));
}

double vector_distance(const SparseVector& a, const SparseVector& b, VectorMetric metric) {
  if (a.dim() != b.dim()) throw Error(ErrorCode::DimMismatch, "vector dimensions differ");
  NeumaierSum total;
  auto add = [&](double diff) {
    total.add(metric == VectorMetric::L1 ? std::abs(diff) : diff * diff);
  };
  const auto& x = a.entries();
  const auto& y = b.entries();
  std::size_t i = 0, j = 0;
  while (i < x.size() || j < y.size()) {
    if (j == y.size() || (i < x.size() && x[i].id < y[j].id)) {
      add(x[i++].value);
    } else if (i == x.size() || y[j].id < x[i].id) {
      add(y[j++].value);
    } else {
      add(x[i++].value - y[j++].value);
    }
  }
  return metric == VectorMetric::L1 ? total.value() : std::sqrt(total.value());
}

}  // namespace wmdlab
