#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "fusionrec/common.hpp"
#include "fusionrec/data_model.hpp"
#include "fusionrec/gat.hpp"

namespace fusionrec {

/// A user's candidates in rank order. Holds either the full candidate ranking or its top-k prefix.
struct RankedList {
  NodeId user = 0;
  std::vector<NodeId> items;
  std::vector<double> scores;
};

struct MetricsReport {
  double hit_rate_at_k = 0.0;
  double precision_at_k = 0.0;
  double recall_at_k = 0.0;
  double ndcg_at_k = 0.0;
  double mrr = 0.0;
  std::optional<double> gini;
  std::size_t k = 10;
  std::size_t n_users_evaluated = 0;
};

/// Ranks `items` minus the sorted `exclude` list by descending score, ties to the smaller id.
template <typename ScoreFn>
RankedList rank_items(NodeId user, std::span<const NodeId> items, std::span<const NodeId> exclude, ScoreFn&& score_fn) {
  struct Entry {
    NodeId id;
    double s;
  };
  std::vector<Entry> cand;
  cand.reserve(items.size());
  for (NodeId it : items) {
    if (std::binary_search(exclude.begin(), exclude.end(), it)) continue;
    const double s = score_fn(user, it);
    if (!std::isfinite(s)) fail_numeric("non-finite score for user " + std::to_string(user) + ", item " + std::to_string(it));
    cand.push_back({it, s});
  }
  std::sort(cand.begin(), cand.end(), [](const Entry& a, const Entry& b) {
    if (a.s != b.s) return a.s > b.s;
    return a.id < b.id;
  });
  RankedList r;
  r.user = user;
  r.items.reserve(cand.size());
  r.scores.reserve(cand.size());
  for (auto& e : cand) {
    r.items.push_back(e.id);
    r.scores.push_back(e.s);
  }
  return r;
}

inline RankedList truncate(RankedList r, std::size_t k) {
  if (r.items.size() > k) {
    r.items.resize(k);
    r.scores.resize(k);
  }
  return r;
}

/// HR/P/R/NDCG at k and full-ranking MRR. `rankings` must be full candidate rankings;
/// `positives[user]` is the sorted relevant set. Users without positives are skipped.
inline MetricsReport ranking_metrics(const std::vector<RankedList>& rankings,
                                     const std::vector<std::vector<NodeId>>& positives, std::size_t k) {
  if (k == 0) fail_usage("ranking_metrics: k must be >= 1");
  MetricsReport m;
  m.k = k;
  for (const auto& r : rankings) {
    const auto& pos = positives.at(r.user);
    if (pos.empty()) continue;
    ++m.n_users_evaluated;
    std::size_t hits = 0;
    double dcg = 0.0;
    double rr = 0.0;
    for (std::size_t rank = 0; rank < r.items.size(); ++rank) {
      if (!std::binary_search(pos.begin(), pos.end(), r.items[rank])) continue;
      if (rr == 0.0) rr = 1.0 / static_cast<double>(rank + 1);
      if (rank < k) {
        ++hits;
        dcg += 1.0 / std::log2(static_cast<double>(rank + 2));
      }
    }
    double idcg = 0.0;
    for (std::size_t rank = 0; rank < std::min(k, pos.size()); ++rank) idcg += 1.0 / std::log2(static_cast<double>(rank + 2));
    m.hit_rate_at_k += hits > 0 ? 1.0 : 0.0;
    m.precision_at_k += static_cast<double>(hits) / static_cast<double>(k);
    m.recall_at_k += static_cast<double>(hits) / static_cast<double>(pos.size());
    m.ndcg_at_k += dcg / idcg;
    m.mrr += rr;
  }
  if (m.n_users_evaluated == 0) fail_data("ranking_metrics: no user has a relevant item to evaluate");
  const double n = static_cast<double>(m.n_users_evaluated);
  m.hit_rate_at_k /= n;
  m.precision_at_k /= n;
  m.recall_at_k /= n;
  m.ndcg_at_k /= n;
  m.mrr /= n;
  return m;
}

/// Relevant items per user: items in `eval` the user has not already interacted with in train.
inline std::vector<std::vector<NodeId>> relevant_items(const std::vector<Interaction>& eval,
                                                       const std::vector<std::vector<NodeId>>& train_pos,
                                                       std::size_t n_nodes) {
  auto rel = items_by_user(eval, n_nodes);
  for (std::size_t u = 0; u < n_nodes; ++u) {
    auto& v = rel[u];
    const auto& tp = train_pos[u];
    std::erase_if(v, [&](NodeId it) { return std::binary_search(tp.begin(), tp.end(), it); });
  }
  return rel;
}

/// Scores every user that has relevant items against all non-train items and computes metrics.
template <typename ScoreFn>
MetricsReport evaluate_scores(ScoreFn&& score_fn, const InteractionGraph& g,
                              const std::vector<std::vector<NodeId>>& train_pos,
                              const std::vector<std::vector<NodeId>>& relevant, std::size_t k,
                              std::vector<RankedList>* rankings_out = nullptr) {
  std::vector<RankedList> rankings;
  for (NodeId u : g.users()) {
    if (relevant[u].empty()) continue;
    rankings.push_back(rank_items(u, g.items(), train_pos[u], score_fn));
  }
  MetricsReport m = ranking_metrics(rankings, relevant, k);
  if (rankings_out) *rankings_out = std::move(rankings);
  return m;
}

// ---------------------------------------------------------------------------
// Gini interpretability score

/// Gini coefficient sum_i sum_j |x_i - x_j| / (2 m sum x) of a non-negative row.
inline double gini(std::span<const double> x) {
  const std::size_t m = x.size();
  if (m == 0) fail_data("gini: empty row");
  double total = 0.0;
  for (double v : x) total += v;
  if (total <= 0.0) return 0.0;
  // Sorted form of the pairwise sum: sum_{i<j} (x_(j) - x_(i)) = sum_i (2i - m + 1) x_(i).
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) acc += (2.0 * static_cast<double>(i) - static_cast<double>(m) + 1.0) * s[i];
  return (2.0 * acc) / (2.0 * static_cast<double>(m) * total);
}

/// Mean Gini of the final layer's attention rows over `nodes`, skipping nodes whose only
/// neighbor is themselves.
inline double gini_interpretability(const LayerActivation& final_layer, const InteractionGraph& g,
                                    std::span<const NodeId> nodes) {
  double sum = 0.0;
  std::size_t used = 0;
  for (NodeId i : nodes) {
    const auto row = final_layer.alpha_row(g, i);
    if (row.size() < 2) continue;
    sum += gini(row);
    ++used;
  }
  if (used == 0) fail_data("gini_interpretability: no node has two or more neighbors");
  return sum / static_cast<double>(used);
}

}  // namespace fusionrec
