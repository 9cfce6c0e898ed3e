#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fusionrec/common.hpp"
#include "fusionrec/csv.hpp"
#include "fusionrec/tensor.hpp"

namespace fusionrec {

enum class NodeKind { User, Item };

inline const char* to_string(NodeKind k) { return k == NodeKind::User ? "user" : "item"; }

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::User;
  std::string text;
  std::optional<int> pseudo_target;
};

struct Interaction {
  NodeId user = 0;
  NodeId item = 0;
  double label = 1.0;
  std::int64_t timestamp = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct SocialEdge {
  NodeId a = 0;
  NodeId b = 0;
};

/// Everything ingestion produces. `external_ids[dense]` is the original node id string.
struct Dataset {
  std::vector<Node> nodes;
  std::vector<Interaction> interactions;
  std::vector<SocialEdge> social;
  std::vector<std::string> external_ids;
};

// ---------------------------------------------------------------------------
// Text cleaning

namespace detail {

// "[IMG]", "[ASR]", ...: bracketed runs of uppercase letters, digits or '_'.
inline std::size_t modality_tag_length(std::string_view s, std::size_t pos) {
  if (s[pos] != '[') return 0;
  std::size_t i = pos + 1;
  while (i < s.size() && ((s[i] >= 'A' && s[i] <= 'Z') || (s[i] >= '0' && s[i] <= '9') || s[i] == '_')) ++i;
  if (i == pos + 1 || i >= s.size() || s[i] != ']') return 0;
  return i - pos + 1;
}

}  // namespace detail

/// Lowercase, drop control characters, collapse whitespace runs to one space, trim.
/// Modality tags such as "[IMG]" are kept verbatim.
inline std::string clean_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < raw.size();) {
    const unsigned char c = static_cast<unsigned char>(raw[i]);
    const bool is_space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    if (is_space) {
      pending_space = true;
      ++i;
      continue;
    }
    if (c < 0x20 || c == 0x7F) {
      ++i;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    if (std::size_t tag = detail::modality_tag_length(raw, i); tag > 0) {
      out.append(raw.substr(i, tag));
      i += tag;
      continue;
    }
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    ++i;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

namespace detail {

inline std::ifstream open_or_fail(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail_data(std::string("cannot open ") + what + " file '" + path + "'");
  return in;
}

inline void expect_header(csv::Reader& r, std::vector<std::string_view> want) {
  auto rec = r.next();
  if (!rec) fail_data(r.source() + ": empty file, expected header");
  std::vector<std::string> got;
  for (auto& f : rec->fields) got.push_back(csv::trim(f));
  if (!got.empty() && got[0].rfind("\xEF\xBB\xBF", 0) == 0) got[0] = got[0].substr(3);
  bool ok = got.size() == want.size();
  for (std::size_t i = 0; ok && i < want.size(); ++i) ok = got[i] == want[i];
  if (!ok) {
    std::string w;
    for (auto s : want) w += (w.empty() ? "" : ",") + std::string(s);
    fail_data(csv::where(r.source(), rec->line) + ": bad header, expected '" + w + "'");
  }
}

inline bool is_external_id(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace detail

/// Reads the nodes, interactions and (optional) social CSV files. Node ids are remapped to
/// dense ids in nodes-file order; `Dataset::external_ids` is the sidecar mapping.
inline Dataset ingest(const std::string& interactions_path, const std::string& nodes_path,
                      const std::optional<std::string>& social_path = std::nullopt) {
  Dataset ds;
  std::unordered_map<std::string, NodeId> dense;

  {
    auto in = detail::open_or_fail(nodes_path, "nodes");
    csv::Reader r(in, nodes_path);
    detail::expect_header(r, {"node_id", "kind", "pseudo_target", "text"});
    while (auto rec = r.next()) {
      const auto ctx = csv::where(nodes_path, rec->line);
      if (rec->fields.size() == 1 && rec->fields[0].empty()) continue;
      if (rec->fields.size() != 4) fail_data(ctx + ": expected 4 fields, got " + std::to_string(rec->fields.size()));
      const std::string ext = csv::trim(rec->fields[0]);
      if (!detail::is_external_id(ext)) fail_data(ctx + ": node_id must be a non-negative integer");
      if (dense.contains(ext)) fail_data(ctx + ": duplicate node_id " + ext);
      Node n;
      n.id = static_cast<NodeId>(ds.nodes.size());
      const std::string kind = csv::trim(rec->fields[1]);
      if (kind == "user") n.kind = NodeKind::User;
      else if (kind == "item") n.kind = NodeKind::Item;
      else fail_data(ctx + ": kind must be 'user' or 'item', got '" + kind + "'");
      const std::string pt = csv::trim(rec->fields[2]);
      if (pt == "0" || pt == "1") n.pseudo_target = pt == "1" ? 1 : 0;
      else if (!pt.empty()) fail_data(ctx + ": pseudo_target must be empty, 0 or 1");
      n.text = clean_text(rec->fields[3]);
      dense.emplace(ext, n.id);
      ds.external_ids.push_back(ext);
      ds.nodes.push_back(std::move(n));
    }
  }

  auto lookup = [&](const std::string& raw, const std::string& ctx, NodeKind want, const char* col) {
    const std::string ext = csv::trim(raw);
    auto it = dense.find(ext);
    if (it == dense.end()) fail_data(ctx + ": unknown node id '" + ext + "' in column " + col);
    if (ds.nodes[it->second].kind != want)
      fail_data(ctx + ": node " + ext + " in column " + col + " is not a " + to_string(want));
    return it->second;
  };

  {
    auto in = detail::open_or_fail(interactions_path, "interactions");
    csv::Reader r(in, interactions_path);
    detail::expect_header(r, {"user_id", "item_id", "label", "timestamp"});
    while (auto rec = r.next()) {
      const auto ctx = csv::where(interactions_path, rec->line);
      if (rec->fields.size() == 1 && rec->fields[0].empty()) continue;
      if (rec->fields.size() != 4) fail_data(ctx + ": expected 4 fields, got " + std::to_string(rec->fields.size()));
      Interaction x;
      x.user = lookup(rec->fields[0], ctx, NodeKind::User, "user_id");
      x.item = lookup(rec->fields[1], ctx, NodeKind::Item, "item_id");
      x.label = csv::parse_double(csv::trim(rec->fields[2]), ctx);
      if (!(x.label >= 0.0 && x.label <= 1.0)) fail_data(ctx + ": label must lie in [0,1]");
      x.timestamp = csv::parse_int(csv::trim(rec->fields[3]), ctx);
      if (x.timestamp < 0) fail_data(ctx + ": negative timestamp");
      ds.interactions.push_back(x);
    }
  }

  if (social_path) {
    auto in = detail::open_or_fail(*social_path, "social");
    csv::Reader r(in, *social_path);
    detail::expect_header(r, {"user_a", "user_b"});
    std::set<std::pair<NodeId, NodeId>> seen;
    while (auto rec = r.next()) {
      const auto ctx = csv::where(*social_path, rec->line);
      if (rec->fields.size() == 1 && rec->fields[0].empty()) continue;
      if (rec->fields.size() != 2) fail_data(ctx + ": expected 2 fields");
      const NodeId a = lookup(rec->fields[0], ctx, NodeKind::User, "user_a");
      const NodeId b = lookup(rec->fields[1], ctx, NodeKind::User, "user_b");
      if (a == b) fail_data(ctx + ": social edge from a user to itself");
      if (seen.emplace(std::min(a, b), std::max(a, b)).second) ds.social.push_back({a, b});
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Chronological split

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct DatasetSplit {
  std::vector<Interaction> train;
  std::vector<Interaction> val;
  std::vector<Interaction> test;
  std::int64_t train_end = 0;  // max timestamp in train
  std::int64_t val_end = 0;    // max timestamp in val
};

/// Partition sizes for n records. Each ratio's exact share is floored and the leftover records
/// go to the partitions with the largest fractional parts (ties favour train, then val).
inline std::array<std::size_t, 3> split_counts(std::size_t n, const SplitRatios& r) {
  const std::array<double, 3> ratio{r.train, r.val, r.test};
  std::array<std::size_t, 3> count{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int p = 0; p < 3; ++p) {
    const double exact = static_cast<double>(n) * ratio[p];
    double fl = std::floor(exact + 1e-9);
    count[p] = static_cast<std::size_t>(fl);
    frac[p] = std::max(0.0, exact - fl);
    assigned += count[p];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b] + 1e-12; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++count[order[k % 3]];
  return count;
}

/// Sorts by (timestamp, user, item) and cuts at cumulative-count boundaries so training
/// strictly precedes validation, which precedes test.
inline DatasetSplit chronological_split(std::vector<Interaction> interactions, const SplitRatios& r) {
  if (interactions.empty()) fail_data("chronological_split: no interactions");
  if (!(r.train > 0 && r.val > 0 && r.test > 0))
    fail_usage("chronological_split: ratios must all be positive");
  if (std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    fail_usage("chronological_split: ratios must sum to 1");
  std::stable_sort(interactions.begin(), interactions.end(), [](const Interaction& a, const Interaction& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.user != b.user) return a.user < b.user;
    return a.item < b.item;
  });
  const auto counts = split_counts(interactions.size(), r);
  if (counts[0] == 0 || counts[1] == 0 || counts[2] == 0)
    fail_data("chronological_split: " + std::to_string(interactions.size()) +
              " interactions give an empty partition (train/val/test = " + std::to_string(counts[0]) + "/" +
              std::to_string(counts[1]) + "/" + std::to_string(counts[2]) + "); adjust the split ratios");
  DatasetSplit s;
  auto it = interactions.begin();
  s.train.assign(it, it + static_cast<std::ptrdiff_t>(counts[0]));
  it += static_cast<std::ptrdiff_t>(counts[0]);
  s.val.assign(it, it + static_cast<std::ptrdiff_t>(counts[1]));
  it += static_cast<std::ptrdiff_t>(counts[1]);
  s.test.assign(it, interactions.end());
  s.train_end = s.train.back().timestamp;
  s.val_end = s.val.back().timestamp;
  return s;
}

// ---------------------------------------------------------------------------
// Interaction graph

/// Undirected graph in CSR form. Every node lists itself once; neighbor lists are sorted.
class InteractionGraph {
 public:
  InteractionGraph() = default;

  std::size_t num_nodes() const { return kinds_.size(); }
  std::size_t num_edges() const { return neighbors_.size(); }
  NodeKind kind(NodeId i) const { return kinds_[i]; }
  const std::vector<NodeKind>& kinds() const { return kinds_; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  /// Offset of node i's first neighbor in the flat edge arrays.
  std::size_t edge_begin(NodeId i) const { return offsets_[i]; }
  std::size_t edge_end(NodeId i) const { return offsets_[i + 1]; }
  NodeId edge_target(std::size_t e) const { return neighbors_[e]; }

  bool has_edge(NodeId a, NodeId b) const {
    auto n = neighbors(a);
    return std::binary_search(n.begin(), n.end(), b);
  }

  /// Degree without the self-loop.
  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i] - 1; }

  const std::vector<NodeId>& users() const { return users_; }
  const std::vector<NodeId>& items() const { return items_; }

  static InteractionGraph from_edges(const std::vector<NodeKind>& kinds,
                                     const std::vector<std::pair<NodeId, NodeId>>& edges) {
    InteractionGraph g;
    g.kinds_ = kinds;
    const std::size_t n = kinds.size();
    std::vector<std::vector<NodeId>> adj(n);
    for (NodeId i = 0; i < n; ++i) {
      adj[i].push_back(i);
      (kinds[i] == NodeKind::User ? g.users_ : g.items_).push_back(i);
    }
    for (auto [a, b] : edges) {
      if (a >= n || b >= n) fail_data("graph edge references unknown node");
      if (a == b) continue;
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    g.offsets_.assign(n + 1, 0);
    for (NodeId i = 0; i < n; ++i) {
      auto& v = adj[i];
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      g.offsets_[i + 1] = g.offsets_[i] + v.size();
    }
    g.neighbors_.reserve(g.offsets_[n]);
    for (auto& v : adj) g.neighbors_.insert(g.neighbors_.end(), v.begin(), v.end());
    return g;
  }

 private:
  std::vector<NodeKind> kinds_;
  std::vector<std::size_t> offsets_;
  std::vector<NodeId> neighbors_;
  std::vector<NodeId> users_;
  std::vector<NodeId> items_;
};

/// Graph from the train partition and social ties only. Validation and test interactions
/// must never be passed here.
inline InteractionGraph build_graph(const std::vector<Node>& nodes, const std::vector<Interaction>& train,
                                    const std::vector<SocialEdge>& social) {
  std::vector<NodeKind> kinds(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) kinds[i] = nodes[i].kind;
  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(train.size() + social.size());
  for (const auto& x : train) edges.emplace_back(x.user, x.item);
  for (const auto& s : social) edges.emplace_back(s.a, s.b);
  return InteractionGraph::from_edges(kinds, edges);
}

/// Pseudo-label ground truth per node. Explicit targets win; otherwise 1 when the node's
/// degree is at least the median degree of its kind.
inline std::vector<double> resolve_pseudo_targets(const std::vector<Node>& nodes, const InteractionGraph& g) {
  auto median_of = [&](NodeKind k) {
    std::vector<double> d;
    for (NodeId i = 0; i < g.num_nodes(); ++i)
      if (g.kind(i) == k) d.push_back(static_cast<double>(g.degree(i)));
    if (d.empty()) return 0.0;
    std::sort(d.begin(), d.end());
    const std::size_t m = d.size() / 2;
    return d.size() % 2 ? d[m] : 0.5 * (d[m - 1] + d[m]);
  };
  const double med_user = median_of(NodeKind::User);
  const double med_item = median_of(NodeKind::Item);
  std::vector<double> y(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].pseudo_target) {
      y[i] = *nodes[i].pseudo_target;
    } else {
      const double med = nodes[i].kind == NodeKind::User ? med_user : med_item;
      y[i] = static_cast<double>(g.degree(static_cast<NodeId>(i))) >= med ? 1.0 : 0.0;
    }
  }
  return y;
}

/// Items each user interacted with in `xs`, sorted and unique, indexed by node id.
inline std::vector<std::vector<NodeId>> items_by_user(const std::vector<Interaction>& xs, std::size_t n_nodes) {
  std::vector<std::vector<NodeId>> out(n_nodes);
  for (const auto& x : xs) out[x.user].push_back(x.item);
  for (auto& v : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Negative sampling

struct NegativeSample {
  std::vector<NodeId> items;
  bool shortfall = false;
};

/// Per-user candidate lists (items the user has no train edge to), built once per graph.
class NegativeSampler {
 public:
  explicit NegativeSampler(const InteractionGraph& g) : candidates_(g.num_nodes()) {
    for (NodeId u : g.users()) {
      auto& c = candidates_[u];
      for (NodeId it : g.items())
        if (!g.has_edge(u, it)) c.push_back(it);
    }
  }

  const std::vector<NodeId>& candidates(NodeId user) const { return candidates_[user]; }

  NegativeSample sample(NodeId user, std::size_t n, Rng& rng) const {
    NegativeSample out;
    const auto& c = candidates_.at(user);
    if (n >= c.size()) {
      out.items = c;
      out.shortfall = n > c.size();
      rng.shuffle(out.items);
      return out;
    }
    // Partial Fisher-Yates over a scratch copy.
    std::vector<NodeId> pool = c;
    out.items.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t j = k + rng.below(pool.size() - k);
      std::swap(pool[k], pool[j]);
      out.items.push_back(pool[k]);
    }
    return out;
  }

 private:
  std::vector<std::vector<NodeId>> candidates_;
};

inline NegativeSample negative_sample(NodeId user, const InteractionGraph& g, std::size_t n, Rng& rng) {
  if (user >= g.num_nodes() || g.kind(user) != NodeKind::User) fail_data("negative_sample: not a user node");
  return NegativeSampler(g).sample(user, n, rng);
}

// ---------------------------------------------------------------------------
// Synthetic dual-signal dataset

struct SyntheticConfig {
  std::size_t n_users = 240;
  std::size_t n_items = 120;
  std::size_t n_communities = 4;  // latent graph signal
  std::size_t n_topics = 4;       // latent text signal
  std::size_t vocab_per_topic = 12;
  std::size_t words_per_text = 8;
  double text_noise = 0.25;  // fraction of words drawn from other topics
  double p_none = 0.01;
  double p_community = 0.12;
  double p_topic = 0.12;
  double p_both = 0.45;
  double p_social_same = 0.05;
  double p_social_other = 0.002;
  // Item appeal: scales every interaction probability of the item and is described by
  // dedicated words in its text, so popularity is partly predictable from text.
  double appeal_share = 0.5;
  double appeal_high = 1.5;
  double appeal_low = 0.5;
  double appeal_word_noise = 0.1;
  bool label_appeal = true;  // write item appeal into pseudo_target
  std::uint64_t seed = 7;
};

/// Latent assignments behind a generated dataset; exposes the exact interaction probabilities.
struct SyntheticTruth {
  SyntheticConfig config;
  std::vector<std::size_t> community;  // per node
  std::vector<std::size_t> topic;      // per node
  std::vector<bool> appealing;         // per node, items only

  /// Match-level probability before the appeal multiplier.
  double base_probability(bool community_match, bool topic_match) const {
    if (community_match && topic_match) return config.p_both;
    if (community_match) return config.p_community;
    if (topic_match) return config.p_topic;
    return config.p_none;
  }

  double interaction_probability(NodeId user, NodeId item) const {
    const double base = base_probability(community[user] == community[item], topic[user] == topic[item]);
    return std::min(1.0, base * (appealing[item] ? config.appeal_high : config.appeal_low));
  }

  /// Closed-form expected positive rate for a random (user, item) pair under the generator's
  /// independent uniform latent assignment.
  double mean_rate() const {
    const double pc = 1.0 / static_cast<double>(config.n_communities);
    const double pt = 1.0 / static_cast<double>(config.n_topics);
    double rate = 0.0;
    for (int a = 0; a < 2; ++a) {
      const double pa = a ? config.appeal_share : 1.0 - config.appeal_share;
      const double mult = a ? config.appeal_high : config.appeal_low;
      auto p = [&](bool c, bool t) { return std::min(1.0, base_probability(c, t) * mult); };
      rate += pa * (pc * pt * p(true, true) + pc * (1 - pt) * p(true, false) + (1 - pc) * pt * p(false, true) +
                    (1 - pc) * (1 - pt) * p(false, false));
    }
    return rate;
  }
};

namespace detail {

// Appeal vocabulary: premium-sounding words for appealing items, plain ones otherwise.
inline const std::array<const char*, 6>& appeal_words(bool appealing) {
  static constexpr std::array<const char*, 6> kHigh{"premium", "award", "flagship", "trusted", "elite", "bestseller"};
  static constexpr std::array<const char*, 6> kLow{"basic", "legacy", "niche", "standard", "entry", "simple"};
  return appealing ? kHigh : kLow;
}

inline std::string synthetic_word(std::size_t topic, std::size_t k) {
  static constexpr std::array<const char*, 12> kSyl{"ba", "ko", "ri", "ten", "mu", "sel", "da", "vor",
                                                    "lin", "pe", "gra", "zu"};
  std::string w = kSyl[(topic * 5 + k) % kSyl.size()];
  w += kSyl[(topic * 7 + k * 3 + 1) % kSyl.size()];
  w += std::to_string(topic);
  w += kSyl[k % kSyl.size()];
  return w;
}

}  // namespace detail

struct SyntheticDataset {
  Dataset data;
  SyntheticTruth truth;
};

/// Users and items each get a community (expressed only through interactions and social ties)
/// and a topic (expressed through text). Users come first in id order, then items.
inline SyntheticDataset generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_users == 0 || cfg.n_items == 0 || cfg.n_communities == 0 || cfg.n_topics == 0 ||
      cfg.vocab_per_topic == 0 || cfg.words_per_text == 0)
    fail_usage("generate_synthetic: all counts must be positive");
  Rng rng(cfg.seed);
  SyntheticDataset out;
  out.truth.config = cfg;
  const std::size_t n = cfg.n_users + cfg.n_items;
  out.truth.community.resize(n);
  out.truth.topic.resize(n);
  out.truth.appealing.assign(n, false);
  auto& ds = out.data;

  auto make_text = [&](std::size_t topic) {
    std::string text;
    for (std::size_t w = 0; w < cfg.words_per_text; ++w) {
      std::size_t t = topic;
      if (cfg.n_topics > 1 && rng.bernoulli(cfg.text_noise)) t = rng.below(cfg.n_topics);
      if (!text.empty()) text.push_back(' ');
      text += detail::synthetic_word(t, rng.below(cfg.vocab_per_topic));
    }
    return text;
  };

  for (std::size_t i = 0; i < n; ++i) {
    Node nd;
    nd.id = static_cast<NodeId>(i);
    nd.kind = i < cfg.n_users ? NodeKind::User : NodeKind::Item;
    out.truth.community[i] = rng.below(cfg.n_communities);
    out.truth.topic[i] = rng.below(cfg.n_topics);
    nd.text = make_text(out.truth.topic[i]);
    if (nd.kind == NodeKind::Item) {
      const bool appealing = rng.bernoulli(cfg.appeal_share);
      out.truth.appealing[i] = appealing;
      if (cfg.label_appeal) nd.pseudo_target = appealing ? 1 : 0;
      for (int w = 0; w < 2; ++w) {
        const bool shown = rng.bernoulli(cfg.appeal_word_noise) ? !appealing : appealing;
        nd.text += " ";
        nd.text += detail::appeal_words(shown)[rng.below(6)];
      }
      if (rng.bernoulli(0.2)) nd.text = "[IMG] " + nd.text;
    }
    ds.nodes.push_back(std::move(nd));
    ds.external_ids.push_back(std::to_string(1000 + i));
  }

  for (NodeId u = 0; u < cfg.n_users; ++u)
    for (NodeId it = static_cast<NodeId>(cfg.n_users); it < n; ++it)
      if (rng.bernoulli(out.truth.interaction_probability(u, it))) ds.interactions.push_back({u, it, 1.0, 0});

  // Random arrival order, strictly increasing clock.
  rng.shuffle(ds.interactions);
  std::int64_t clock = 1'600'000'000;
  for (auto& x : ds.interactions) {
    clock += 1 + static_cast<std::int64_t>(rng.below(3600));
    x.timestamp = clock;
  }

  for (NodeId a = 0; a < cfg.n_users; ++a)
    for (NodeId b = a + 1; b < cfg.n_users; ++b) {
      const double p = out.truth.community[a] == out.truth.community[b] ? cfg.p_social_same : cfg.p_social_other;
      if (rng.bernoulli(p)) ds.social.push_back({a, b});
    }
  return out;
}

}  // namespace fusionrec
