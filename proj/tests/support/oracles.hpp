#pragma once

// Independent reference implementations used only by tests. Nothing here calls the code under
// test for the quantity it checks.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include "fusionrec/common.hpp"
#include "fusionrec/data_model.hpp"
#include "fusionrec/metrics.hpp"
#include "fusionrec/tensor.hpp"

namespace oracle {

using fusionrec::NodeId;

struct TinyUser {
  std::vector<NodeId> ranking;  // full candidate ranking, best first
  std::set<NodeId> positives;
};

/// Exhaustive reference metrics. Ideal DCG is the maximum DCG over every permutation of the
/// candidate list, so it does not rely on the min(k, |positives|) shortcut.
inline fusionrec::MetricsReport brute_force_metrics(const std::vector<TinyUser>& users, std::size_t k) {
  if (users.size() > 4) throw std::invalid_argument("brute_force_metrics: at most 4 users");
  fusionrec::MetricsReport m;
  m.k = k;
  auto dcg_of = [&](const std::vector<NodeId>& order, const std::set<NodeId>& pos) {
    double d = 0.0;
    for (std::size_t r = 1; r <= order.size() && r <= k; ++r)
      if (pos.count(order[r - 1])) d += std::log(2.0) / std::log(static_cast<double>(r) + 1.0);
    return d;
  };
  for (const auto& u : users) {
    if (u.ranking.size() > 6) throw std::invalid_argument("brute_force_metrics: at most 6 items");
    if (u.positives.empty()) continue;
    m.n_users_evaluated += 1;
    std::vector<NodeId> top(u.ranking.begin(), u.ranking.begin() + static_cast<long>(std::min(k, u.ranking.size())));
    int hits = 0;
    for (NodeId it : top) hits += u.positives.count(it) ? 1 : 0;
    m.hit_rate_at_k += hits > 0 ? 1 : 0;
    m.precision_at_k += hits / static_cast<double>(k);
    m.recall_at_k += hits / static_cast<double>(u.positives.size());
    std::vector<NodeId> perm = u.ranking;
    std::sort(perm.begin(), perm.end());
    double ideal = 0.0;
    do {
      ideal = std::max(ideal, dcg_of(perm, u.positives));
    } while (std::next_permutation(perm.begin(), perm.end()));
    // Positives the candidate list lacks can never be ranked; the ideal ranking is over candidates.
    m.ndcg_at_k += ideal > 0 ? dcg_of(u.ranking, u.positives) / ideal : 0.0;
    for (std::size_t r = 0; r < u.ranking.size(); ++r)
      if (u.positives.count(u.ranking[r])) {
        m.mrr += 1.0 / static_cast<double>(r + 1);
        break;
      }
  }
  if (m.n_users_evaluated == 0) throw std::invalid_argument("brute_force_metrics: nobody to evaluate");
  const double n = static_cast<double>(m.n_users_evaluated);
  m.hit_rate_at_k /= n;
  m.precision_at_k /= n;
  m.recall_at_k /= n;
  m.ndcg_at_k /= n;
  m.mrr /= n;
  return m;
}

/// Gini by the literal double sum over all ordered pairs.
inline double pairwise_gini(const std::vector<double>& x) {
  double num = 0.0, total = 0.0;
  for (double a : x) {
    total += a;
    for (double b : x) num += std::abs(a - b);
  }
  return num / (2.0 * static_cast<double>(x.size()) * total);
}

/// FNV-1a 64 written out from its standard constants.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Random interactions over users [0, n_users) and items [n_users, n_users + n_items) with
/// random (possibly repeated) timestamps.
inline std::vector<fusionrec::Interaction> random_interactions(std::size_t n_users, std::size_t n_items,
                                                               std::size_t count, fusionrec::Rng& rng,
                                                               std::int64_t max_ts = 50) {
  std::vector<fusionrec::Interaction> xs;
  for (std::size_t k = 0; k < count; ++k)
    xs.push_back({static_cast<NodeId>(rng.below(n_users)), static_cast<NodeId>(n_users + rng.below(n_items)), 1.0,
                  static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_ts)))});
  return xs;
}

inline std::vector<fusionrec::Node> make_nodes(std::size_t n_users, std::size_t n_items) {
  std::vector<fusionrec::Node> nodes;
  for (std::size_t i = 0; i < n_users + n_items; ++i)
    nodes.push_back({static_cast<NodeId>(i), i < n_users ? fusionrec::NodeKind::User : fusionrec::NodeKind::Item,
                     "node " + std::to_string(i), std::nullopt});
  return nodes;
}

/// A random connected-ish graph: a bipartite edge set, optional social ties, self-loops.
inline fusionrec::InteractionGraph random_graph(std::size_t n_users, std::size_t n_items, std::size_t n_edges,
                                                fusionrec::Rng& rng, std::size_t n_social = 0) {
  const auto nodes = make_nodes(n_users, n_items);
  const auto xs = random_interactions(n_users, n_items, n_edges, rng);
  std::vector<fusionrec::SocialEdge> social;
  std::set<std::pair<NodeId, NodeId>> seen;
  for (std::size_t k = 0; k < n_social && n_users > 1; ++k) {
    NodeId a = static_cast<NodeId>(rng.below(n_users)), b = static_cast<NodeId>(rng.below(n_users));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (seen.insert({a, b}).second) social.push_back({a, b});
  }
  return fusionrec::build_graph(nodes, xs, social);
}

inline fusionrec::Matrix random_matrix(std::size_t r, std::size_t c, fusionrec::Rng& rng, double scale = 1.0) {
  fusionrec::Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-scale, scale);
  return m;
}

struct FdResult {
  double worst_rel = 0.0;
  std::string worst_name;
  std::size_t checked = 0;
  double worst_abs = 0.0;       // max |fd - an|
  double largest_grad = 0.0;    // max |an|
  std::size_t nonzero = 0;      // elements with |an| > 1e-6
};

/// Central finite differences of `loss` against `analytic` for every element of every tensor.
/// An element agrees when |fd - an| <= abs_floor or the relative error is below the reported worst.
template <typename Params>
FdResult fd_check(Params& params, const Params& analytic, const std::function<double()>& loss, double h = 1e-6,
                  double abs_floor = 1e-8) {
  FdResult out;
  auto pt = params.tensors();
  const auto gt = analytic.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k)
    for (std::size_t e = 0; e < pt[k].tensor->size(); ++e) {
      double& x = pt[k].tensor->data()[e];
      const double x0 = x;
      x = x0 + h;
      const double lp = loss();
      x = x0 - h;
      const double lm = loss();
      x = x0;
      const double fd = (lp - lm) / (2.0 * h);
      const double an = gt[k].tensor->data()[e];
      ++out.checked;
      out.worst_abs = std::max(out.worst_abs, std::abs(fd - an));
      out.largest_grad = std::max(out.largest_grad, std::abs(an));
      out.nonzero += std::abs(an) > 1e-6;
      if (std::abs(fd - an) <= abs_floor) continue;
      const double rel = std::abs(fd - an) / std::max(std::abs(fd), std::abs(an));
      if (rel > out.worst_rel) {
        out.worst_rel = rel;
        out.worst_name = pt[k].name + "[" + std::to_string(e) + "]";
      }
    }
  return out;
}

/// Adds small noise to every tensor, biases included. Zero-initialised biases can leave ReLU
/// pre-activations at exactly 0, where the loss is not differentiable.
template <typename Params>
void jitter(Params& params, fusionrec::Rng& rng, double scale = 0.05) {
  for (auto& t : params.tensors())
    for (double& v : t.tensor->data()) v += rng.uniform(-scale, scale);
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("fusionrec_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p.string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace oracle
