#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fusionrec/common.hpp"
#include "fusionrec/data_model.hpp"
#include "fusionrec/fusion_head.hpp"
#include "fusionrec/metrics.hpp"
#include "fusionrec/mf_model.hpp"
#include "fusionrec/text_embed.hpp"
#include "fusionrec/trainer.hpp"

namespace fusionrec {

/// A dataset after splitting: the leakage-safe train graph, text table, pseudo targets and
/// per-user positive sets for each partition.
struct PreparedData {
  std::vector<Node> nodes;
  DatasetSplit split;
  InteractionGraph graph;
  Matrix text;
  std::vector<double> pseudo_targets;
  std::vector<std::vector<NodeId>> train_pos;
  std::vector<std::vector<NodeId>> val_rel;
  std::vector<std::vector<NodeId>> test_rel;

  ModelContext context() const { return {&graph, &text, &pseudo_targets}; }
  TrainData train_data() const { return {&graph, context(), &split.train, &split.val}; }
};

inline PreparedData prepare(const Dataset& ds, const SplitRatios& ratios, std::size_t embed_dim,
                            std::uint64_t text_seed,
                            const std::map<std::string, EmbeddingVector>* precomputed = nullptr) {
  PreparedData p;
  p.nodes = ds.nodes;
  p.split = chronological_split(ds.interactions, ratios);
  p.graph = build_graph(ds.nodes, p.split.train, ds.social);
  p.text = embed_nodes(ds, embed_dim, text_seed, precomputed);
  p.pseudo_targets = resolve_pseudo_targets(ds.nodes, p.graph);
  const std::size_t n = ds.nodes.size();
  p.train_pos = items_by_user(p.split.train, n);
  p.val_rel = relevant_items(p.split.val, p.train_pos, n);
  p.test_rel = relevant_items(p.split.test, p.train_pos, n);
  return p;
}

/// Top-k items for `user` among items not in `exclude` (sorted), scored in eval mode.
template <typename Model>
RankedList topk(const Model& model, const typename Model::Params& params, NodeId user, const ModelContext& ctx,
                std::size_t k, std::span<const NodeId> exclude) {
  const InteractionGraph& g = *ctx.graph;
  if (user >= g.num_nodes() || g.kind(user) != NodeKind::User) fail_data("topk: unknown user " + std::to_string(user));
  if (k == 0) fail_usage("topk: k must be >= 1");
  return truncate(rank_items(user, g.items(), exclude, eval_scorer(model, params, ctx)), k);
}

/// Mean attention Gini over the final layer of each GAT stack, for the given nodes.
inline std::optional<double> model_gini(const HybridModel& model, const HybridParams& params, const ModelContext& ctx,
                                        std::span<const NodeId> nodes) {
  Rng unused(0);
  const auto cache = model.forward(params, ctx, 0.0, false, unused);
  double sum = 0.0;
  int stacks = 0;
  for (const auto* acts : {&cache.stream_one.activations, &cache.stream_two_gnn.activations}) {
    if (acts->empty()) continue;
    sum += gini_interpretability(acts->back(), *ctx.graph, nodes);
    ++stacks;
  }
  if (stacks == 0) return std::nullopt;
  return sum / stacks;
}

inline std::vector<NodeId> users_with(const std::vector<std::vector<NodeId>>& rel, const InteractionGraph& g) {
  std::vector<NodeId> out;
  for (NodeId u : g.users())
    if (!rel[u].empty()) out.push_back(u);
  return out;
}

/// Test-split metrics for a hybrid model (with Gini) or the MF baseline (without).
inline MetricsReport evaluate_test(const HybridModel& model, const HybridParams& p, const PreparedData& data,
                                   std::size_t k) {
  const auto ctx = data.context();
  MetricsReport m = evaluate_scores(eval_scorer(model, p, ctx), data.graph, data.train_pos, data.test_rel, k);
  const auto users = users_with(data.test_rel, data.graph);
  try {
    m.gini = model_gini(model, p, ctx, users);
  } catch (const Error&) {
    m.gini.reset();  // no evaluated node has two or more neighbors
  }
  return m;
}

inline MetricsReport evaluate_test(const MfModel& model, const MfParams& p, const PreparedData& data, std::size_t k) {
  return evaluate_scores(eval_scorer(model, p, data.context()), data.graph, data.train_pos, data.test_rel, k);
}

// ---------------------------------------------------------------------------
// Experiment harness

/// Rows of a comparison table. Names: "CF", "GNN", "LLM", "Hybrid", "Untrained" for baselines;
/// variant names ("full", "no-text", ...) for the ablation.
enum class ModelKind { CollaborativeFiltering, Hybrid, Untrained };

struct ModelSpec {
  std::string name;
  ModelKind kind = ModelKind::Hybrid;
  Variant variant = Variant::Full;
};

inline std::vector<ModelSpec> default_baselines() {
  return {{"CF", ModelKind::CollaborativeFiltering, Variant::Full},
          {"GNN", ModelKind::Hybrid, Variant::GnnOnly},
          {"LLM", ModelKind::Hybrid, Variant::LlmOnly},
          {"Hybrid", ModelKind::Hybrid, Variant::Full}};
}

/// The hybrid model with its initial parameters: the floor every trained model must clear.
inline ModelSpec untrained_baseline() { return {"Untrained", ModelKind::Untrained, Variant::Full}; }

inline std::vector<ModelSpec> default_ablations() {
  return {{"full", ModelKind::Hybrid, Variant::Full},
          {"no-text", ModelKind::Hybrid, Variant::NoText},
          {"no-graph", ModelKind::Hybrid, Variant::NoGraph},
          {"no-pseudo", ModelKind::Hybrid, Variant::NoPseudo}};
}

inline std::optional<ModelSpec> find_spec(std::string_view name) {
  for (const auto& list : {default_baselines(), default_ablations(), std::vector<ModelSpec>{untrained_baseline()}})
    for (const auto& s : list)
      if (s.name == name) return s;
  return std::nullopt;
}

/// Config actually used for a variant: variants without a pseudo head train with lambda_pseudo = 0.
inline TrainConfig config_for(const ModelSpec& spec, TrainConfig cfg, std::uint64_t seed) {
  cfg.seed = seed;
  if (spec.kind != ModelKind::Hybrid || !Architecture::of(spec.variant).has_pseudo_head()) cfg.lambda_pseudo = 0.0;
  return cfg;
}

struct RunOutcome {
  std::string model;
  std::uint64_t seed = 0;
  MetricsReport test;
  TrainHistory history;
};

/// Trains (where applicable) and evaluates one table row for one seed.
inline RunOutcome run_model(const ModelSpec& spec, const PreparedData& data, const TrainConfig& base_cfg,
                            std::uint64_t seed, std::size_t k) {
  const TrainConfig cfg = config_for(spec, base_cfg, seed);
  RunOutcome out{spec.name, seed, {}, {}};
  const std::size_t n = data.nodes.size();
  switch (spec.kind) {
    case ModelKind::CollaborativeFiltering: {
      MfModel model(n, cfg.embed_dim);
      auto r = train(model, cfg, data.train_data());
      out.test = evaluate_test(model, r.params, data, k);
      out.history = std::move(r.history);
      break;
    }
    case ModelKind::Hybrid: {
      HybridModel model(cfg.shape(n), spec.variant);
      auto r = train(model, cfg, data.train_data());
      out.test = evaluate_test(model, r.params, data, k);
      out.history = std::move(r.history);
      break;
    }
    case ModelKind::Untrained: {
      HybridModel model(cfg.shape(n), spec.variant);
      Rng rng(cfg.seed);
      out.test = evaluate_test(model, model.init(rng), data, k);
      break;
    }
  }
  return out;
}

struct Aggregate {
  MetricsReport mean;
  MetricsReport stddev;
};

/// Mean and sample standard deviation of each metric across runs.
inline Aggregate aggregate(const std::vector<MetricsReport>& runs) {
  Aggregate a;
  if (runs.empty()) return a;
  const double n = static_cast<double>(runs.size());
  using Field = double MetricsReport::*;
  const Field fields[] = {&MetricsReport::hit_rate_at_k, &MetricsReport::precision_at_k, &MetricsReport::recall_at_k,
                          &MetricsReport::ndcg_at_k, &MetricsReport::mrr};
  for (Field f : fields) {
    double mean = 0.0;
    for (const auto& r : runs) mean += r.*f;
    mean /= n;
    double var = 0.0;
    for (const auto& r : runs) var += (r.*f - mean) * (r.*f - mean);
    a.mean.*f = mean;
    a.stddev.*f = runs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  }
  std::vector<double> g;
  for (const auto& r : runs)
    if (r.gini) g.push_back(*r.gini);
  if (g.size() == runs.size()) {
    double mean = 0.0, var = 0.0;
    for (double v : g) mean += v;
    mean /= n;
    for (double v : g) var += (v - mean) * (v - mean);
    a.mean.gini = mean;
    a.stddev.gini = runs.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  }
  a.mean.k = a.stddev.k = runs.front().k;
  a.mean.n_users_evaluated = a.stddev.n_users_evaluated = runs.front().n_users_evaluated;
  return a;
}

struct ComparisonTable {
  std::vector<std::uint64_t> seeds;
  std::vector<RunOutcome> runs;  // model-major, then seed

  std::vector<MetricsReport> reports_for(const std::string& model) const {
    std::vector<MetricsReport> out;
    for (const auto& r : runs)
      if (r.model == model) out.push_back(r.test);
    return out;
  }
  double mean_ndcg(const std::string& model) const { return aggregate(reports_for(model)).mean.ndcg_at_k; }
};

using ProgressFn = std::function<void(const RunOutcome&)>;

inline ComparisonTable run_table(const std::vector<ModelSpec>& specs, const PreparedData& data, const TrainConfig& cfg,
                                 const std::vector<std::uint64_t>& seeds, std::size_t k, const ProgressFn& progress = {}) {
  ComparisonTable t;
  t.seeds = seeds;
  for (const auto& spec : specs)
    for (std::uint64_t seed : seeds) {
      t.runs.push_back(run_model(spec, data, cfg, seed, k));
      if (progress) progress(t.runs.back());
    }
  return t;
}

/// CF, GNN-only, LLM-only and the hybrid model, all on the same split, negatives policy, seeds
/// and metric code.
inline ComparisonTable run_baselines(const PreparedData& data, const TrainConfig& cfg,
                                     const std::vector<std::uint64_t>& seeds, std::size_t k,
                                     const ProgressFn& progress = {}) {
  return run_table(default_baselines(), data, cfg, seeds, k, progress);
}

/// full, no-text, no-graph and no-pseudo, each trained independently.
inline ComparisonTable run_ablation(const PreparedData& data, const TrainConfig& cfg,
                                    const std::vector<std::uint64_t>& seeds, std::size_t k,
                                    const ProgressFn& progress = {}) {
  return run_table(default_ablations(), data, cfg, seeds, k, progress);
}

}  // namespace fusionrec
