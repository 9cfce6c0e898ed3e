#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fusionrec/common.hpp"
#include "fusionrec/csv.hpp"
#include "fusionrec/data_model.hpp"
#include "fusionrec/tensor.hpp"

namespace fusionrec {

using EmbeddingVector = std::vector<double>;

/// Lowercased alphanumeric runs. Bytes >= 0x80 count as word characters so UTF-8 words survive.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80;
    if (word) {
      cur.push_back(ch);
    } else if (c >= 'A' && c <= 'Z') {
      cur.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

/// Feature-hashed bag of unigrams and adjacent bigrams, L2-normalised. Each feature string
/// "<seed>:<token>" is hashed with FNV-1a 64; bucket = H mod d, sign = +1 iff (H / d) is even.
/// This stands in for a language-model encoder and is bit-identical across platforms.
inline EmbeddingVector encode_text(std::string_view text, std::size_t d, std::uint64_t seed = 0) {
  if (d == 0) fail_usage("encode_text: dimension must be >= 1");
  EmbeddingVector v(d, 0.0);
  const auto tokens = tokenize(text);
  const std::string prefix = std::to_string(seed) + ":";
  auto add = [&](const std::string& feature) {
    const std::uint64_t h = fnv1a64(feature, fnv1a64(prefix));
    const std::uint64_t b = h % d;
    v[b] += ((h / d) % 2 == 0) ? 1.0 : -1.0;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    add(tokens[i]);
    if (i + 1 < tokens.size()) add(tokens[i] + " " + tokens[i + 1]);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

/// Reads `node_id,v1,...,vd` rows (no header). Keys are the ids exactly as written.
inline std::map<std::string, EmbeddingVector> load_precomputed(const std::string& path, std::size_t d) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data("cannot open vectors file '" + path + "'");
  csv::Reader r(in, path);
  std::map<std::string, EmbeddingVector> out;
  while (auto rec = r.next()) {
    const auto ctx = csv::where(path, rec->line);
    if (rec->fields.size() == 1 && csv::trim(rec->fields[0]).empty()) continue;
    if (rec->fields.size() != d + 1)
      fail_data(ctx + ": dimension mismatch, row has " + std::to_string(rec->fields.size() - 1) +
                " values but d = " + std::to_string(d));
    const std::string id = csv::trim(rec->fields[0]);
    if (id.empty()) fail_data(ctx + ": empty node id");
    EmbeddingVector v(d);
    for (std::size_t k = 0; k < d; ++k) {
      v[k] = csv::parse_double(csv::trim(rec->fields[k + 1]), ctx);
      if (!std::isfinite(v[k])) fail_data(ctx + ": non-finite value in column " + std::to_string(k + 2));
    }
    if (!out.emplace(id, std::move(v)).second) fail_data(ctx + ": duplicate node id " + id);
  }
  return out;
}

/// Text embeddings e_i for every node as an N x d table. Precomputed vectors (keyed by external
/// id) take precedence; the rest are encoded from the node text.
inline Matrix embed_nodes(const Dataset& ds, std::size_t d, std::uint64_t seed,
                          const std::map<std::string, EmbeddingVector>* precomputed = nullptr) {
  Matrix e(ds.nodes.size(), d);
  for (std::size_t i = 0; i < ds.nodes.size(); ++i) {
    const EmbeddingVector* src = nullptr;
    EmbeddingVector enc;
    if (precomputed) {
      auto it = precomputed->find(ds.external_ids[i]);
      if (it != precomputed->end()) src = &it->second;
    }
    if (!src) {
      enc = encode_text(ds.nodes[i].text, d, seed);
      src = &enc;
    }
    std::copy(src->begin(), src->end(), e.row(i).begin());
  }
  return e;
}

/// Unit-normalised vectors for exact cosine retrieval. Zero vectors are kept as zero and flagged.
class EmbeddingIndex {
 public:
  explicit EmbeddingIndex(std::size_t d) : d_(d) {}

  void add(NodeId id, std::span<const double> v) {
    if (v.size() != d_) fail_data("EmbeddingIndex: dimension mismatch");
    double norm = std::sqrt(dot(v, v));
    EmbeddingVector u(v.begin(), v.end());
    if (norm > 0.0)
      for (double& x : u) x /= norm;
    ids_.push_back(id);
    zero_.push_back(norm == 0.0);
    vecs_.push_back(std::move(u));
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return d_; }
  NodeId id(std::size_t k) const { return ids_[k]; }
  const EmbeddingVector& vector(std::size_t k) const { return vecs_[k]; }
  bool is_zero(std::size_t k) const { return zero_[k]; }

 private:
  std::size_t d_;
  std::vector<NodeId> ids_;
  std::vector<EmbeddingVector> vecs_;
  std::vector<bool> zero_;
};

struct Neighbor {
  NodeId id;
  double similarity;
};

/// Exact top-k by cosine similarity; ties go to the smaller node id.
inline std::vector<Neighbor> cold_start_topk(std::span<const double> query, const EmbeddingIndex& index,
                                             std::size_t k) {
  if (index.size() == 0) fail_data("cold_start_topk: empty index");
  if (k == 0) fail_usage("cold_start_topk: k must be >= 1");
  if (query.size() != index.dim()) fail_data("cold_start_topk: query dimension mismatch");
  const double qn = std::sqrt(dot(query, query));
  if (qn == 0.0) fail_data("cold_start_topk: zero query vector, cosine similarity undefined");
  std::vector<Neighbor> all;
  all.reserve(index.size());
  for (std::size_t j = 0; j < index.size(); ++j)
    all.push_back({index.id(j), dot(query, index.vector(j)) / qn});
  auto better = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  };
  const std::size_t take = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), better);
  all.resize(take);
  return all;
}

}  // namespace fusionrec
