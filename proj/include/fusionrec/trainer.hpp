#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fusionrec/common.hpp"
#include "fusionrec/data_model.hpp"
#include "fusionrec/fusion_head.hpp"
#include "fusionrec/metrics.hpp"
#include "fusionrec/mf_model.hpp"
#include "fusionrec/tensor.hpp"

namespace fusionrec {

enum class SupLoss { PairwiseRanking, BinaryCrossEntropy };

inline const char* to_string(SupLoss s) {
  return s == SupLoss::PairwiseRanking ? "pairwise_ranking" : "binary_cross_entropy";
}

/// Hyperparameters. Defaults follow the reference configuration except the embedding width,
/// which is 32 here instead of `kReferenceEmbedDim`.
struct TrainConfig {
  static constexpr std::size_t kReferenceEmbedDim = 256;

  double learning_rate = 3e-4;
  std::size_t embed_dim = 32;
  std::size_t gnn_layers = 3;
  std::size_t batch_size = 128;
  double dropout = 0.2;
  double lambda_pseudo = 0.3;
  double lambda_sup = 1.0;
  double lambda_reg = 1e-5;
  bool reg_biases = false;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::size_t neg_per_pos = 4;
  SupLoss sup_loss = SupLoss::PairwiseRanking;
  std::uint64_t seed = 1;
  double leaky_slope = 0.2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t text_seed = 0;
  std::size_t val_k = 10;

  void validate() const {
    if (!(learning_rate > 0)) fail_usage("learning_rate must be > 0");
    if (!(dropout >= 0 && dropout < 1)) fail_usage("dropout must lie in [0, 1)");
    if (lambda_pseudo < 0 || lambda_sup < 0 || lambda_reg < 0) fail_usage("loss weights must be >= 0");
    if (patience < 1) fail_usage("patience must be >= 1");
    if (patience > max_epochs) fail_usage("patience must not exceed max_epochs");
    if (embed_dim < 1) fail_usage("embed_dim must be >= 1");
    if (batch_size < 1) fail_usage("batch_size must be >= 1");
    if (neg_per_pos < 1) fail_usage("neg_per_pos must be >= 1");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0))
      fail_usage("adam moments must lie in [0, 1) and eps > 0");
  }

  ModelShape shape(std::size_t n_nodes) const { return {n_nodes, embed_dim, embed_dim, gnn_layers, leaky_slope}; }
};

/// One training example: a user, an observed item and sampled unobserved items.
struct Triple {
  NodeId user = 0;
  NodeId pos = 0;
  std::vector<NodeId> negs;
};

struct LossBreakdown {
  double total = 0.0;
  double sup = 0.0;     // c1
  double pseudo = 0.0;  // c2
  double reg = 0.0;     // c3
};

/// Sum of squares of the regularised tensors (biases only when `include_biases`).
template <typename Params>
double l2_penalty(const Params& p, bool include_biases) {
  double s = 0.0;
  for (const auto& t : p.tensors())
    if (include_biases || !t.is_bias) s += t.tensor->squared_norm();
  return s;
}

/// L = lambda_sup * L_sup + lambda_pseudo * L_pseudo + lambda_reg * ||theta||^2.
/// When `grad` is given it receives d L / d theta (it must be zero-initialised by the caller).
template <typename Model>
LossBreakdown total_loss(const Model& model, const typename Model::Params& params, std::span<const Triple> batch,
                         const ModelContext& ctx, const TrainConfig& cfg, Rng& rng, bool train_mode,
                         typename Model::Params* grad) {
  if (batch.empty()) fail_data("total_loss: empty batch");
  const auto cache = model.forward(params, ctx, cfg.dropout, train_mode, rng);
  const Matrix& h = cache.repr;
  Matrix d_repr;
  if (grad) d_repr = Matrix(h.rows(), h.cols());
  typename Model::Params dummy;
  auto& g = grad ? *grad : dummy;

  auto add_score_grad = [&](NodeId u, NodeId i, double ds) {
    if (!grad || ds == 0.0) return;
    model.score_backward(params, h.row(u), h.row(i), ds, g, d_repr.row(u), d_repr.row(i));
  };

  LossBreakdown out;
  if (cfg.sup_loss == SupLoss::PairwiseRanking) {
    std::size_t pairs = 0;
    for (const auto& t : batch) pairs += t.negs.size();
    if (pairs == 0) fail_data("total_loss: batch has no negative items");
    const double inv = 1.0 / static_cast<double>(pairs);
    for (const auto& t : batch) {
      const double s_pos = model.score(params, h.row(t.user), h.row(t.pos));
      double d_pos = 0.0;
      for (NodeId neg : t.negs) {
        const double diff = s_pos - model.score(params, h.row(t.user), h.row(neg));
        out.sup -= log_sigmoid(diff) * inv;
        const double dd = -sigmoid(-diff) * inv * cfg.lambda_sup;
        d_pos += dd;
        add_score_grad(t.user, neg, -dd);
      }
      add_score_grad(t.user, t.pos, d_pos);
    }
  } else {
    std::size_t entries = 0;
    for (const auto& t : batch) entries += 1 + t.negs.size();
    const double inv = 1.0 / static_cast<double>(entries);
    for (const auto& t : batch) {
      const double s_pos = model.score(params, h.row(t.user), h.row(t.pos));
      out.sup -= log_sigmoid(s_pos) * inv;
      add_score_grad(t.user, t.pos, (sigmoid(s_pos) - 1.0) * inv * cfg.lambda_sup);
      for (NodeId neg : t.negs) {
        const double s = model.score(params, h.row(t.user), h.row(neg));
        out.sup -= log_sigmoid(-s) * inv;
        add_score_grad(t.user, neg, sigmoid(s) * inv * cfg.lambda_sup);
      }
    }
  }

  std::vector<double> d_pseudo;
  if (model.has_pseudo_head()) {
    std::vector<NodeId> nodes;
    for (const auto& t : batch) {
      nodes.push_back(t.user);
      nodes.push_back(t.pos);
      nodes.insert(nodes.end(), t.negs.begin(), t.negs.end());
    }
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    const double inv = 1.0 / static_cast<double>(nodes.size());
    const auto& targets = *ctx.pseudo_targets;
    if (grad) d_pseudo.assign(h.rows(), 0.0);
    for (NodeId i : nodes) {
      const double z = cache.pseudo_logit[i];
      const double y = targets[i];
      out.pseudo -= (y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z)) * inv;
      if (grad) d_pseudo[i] = cfg.lambda_pseudo * (sigmoid(z) - y) * inv;
    }
  }

  out.reg = l2_penalty(params, cfg.reg_biases);
  out.total = cfg.lambda_sup * out.sup + cfg.lambda_pseudo * out.pseudo + cfg.lambda_reg * out.reg;

  if (!std::isfinite(out.sup)) fail_numeric("non-finite supervised loss");
  if (!std::isfinite(out.pseudo)) fail_numeric("non-finite pseudo-label loss");
  if (!std::isfinite(out.reg)) fail_numeric("non-finite regularisation term");

  if (grad) {
    model.backward(params, ctx, cache, d_repr, d_pseudo, g);
    auto gt = g.tensors();
    auto pt = params.tensors();
    for (std::size_t k = 0; k < gt.size(); ++k) {
      if (!cfg.reg_biases && pt[k].is_bias) continue;
      auto& gd = gt[k].tensor->data();
      const auto& pd = pt[k].tensor->data();
      for (std::size_t e = 0; e < gd.size(); ++e) gd[e] += 2.0 * cfg.lambda_reg * pd[e];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// One bias-corrected Adam update at step t (1-based). Gradients are checked for finiteness
/// before anything is modified.
inline void adam_step(std::span<const TensorRef> params, std::span<const TensorRef> grads, AdamState& state,
                      const TrainConfig& cfg, std::uint64_t t) {
  if (t < 1) fail_usage("adam_step: step index must be >= 1");
  if (params.size() != grads.size()) fail_data("adam_step: parameter/gradient count mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].tensor->same_shape(*grads[k].tensor)) fail_data("adam_step: shape mismatch for " + params[k].name);
    if (!grads[k].tensor->all_finite()) fail_numeric("non-finite gradient for " + params[k].name);
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.tensor->rows(), p.tensor->cols());
      state.v.emplace_back(p.tensor->rows(), p.tensor->cols());
    }
  }
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& w = params[k].tensor->data();
    const auto& g = grads[k].tensor->data();
    auto& m = state.m[k].data();
    auto& v = state.v[k].data();
    for (std::size_t e = 0; e < w.size(); ++e) {
      m[e] = b1 * m[e] + (1.0 - b1) * g[e];
      v[e] = b2 * v[e] + (1.0 - b2) * g[e] * g[e];
      w[e] -= cfg.learning_rate * (m[e] / c1) / (std::sqrt(v[e] / c2) + cfg.adam_eps);
    }
  }
}

// ---------------------------------------------------------------------------
// Early stopping

/// Tracks the best validation value. An epoch counts as an improvement only if it beats the
/// best by more than `min_delta`; training stops after `patience` epochs without one.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience, double min_delta = 1e-6) : patience_(patience), min_delta_(min_delta) {}

  /// Returns true when training should stop after this epoch.
  bool observe(std::size_t epoch, double value) {
    improved_ = best_epoch_ == 0 || value > best_value_ + min_delta_;
    if (improved_) {
      best_value_ = value;
      best_epoch_ = epoch;
      stale_ = 0;
    } else {
      ++stale_;
    }
    return stale_ >= patience_;
  }

  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_value_; }

 private:
  std::size_t patience_;
  double min_delta_;
  std::size_t best_epoch_ = 0;
  double best_value_ = -std::numeric_limits<double>::infinity();
  std::size_t stale_ = 0;
  bool improved_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;
  LossBreakdown loss;  // batch means
  double val_ndcg = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double initial_val_ndcg = 0.0;  // untrained parameters
  bool stopped_early = false;
};

/// `epoch, L_total, L_sup, L_pseudo, L_reg, val_ndcg@10, seconds`
inline std::string format_epoch_line(const EpochRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu, %.17g, %.17g, %.17g, %.17g, %.17g, %.3f", r.epoch, r.loss.total, r.loss.sup,
                r.loss.pseudo, r.loss.reg, r.val_ndcg, r.seconds);
  return buf;
}

/// Training data shared by every run on one split.
struct TrainData {
  const InteractionGraph* graph = nullptr;
  ModelContext ctx;
  const std::vector<Interaction>* train = nullptr;
  const std::vector<Interaction>* val = nullptr;
};

template <typename Params>
struct TrainHooks {
  /// Replaces the validation NDCG computation (used to drive constructed curves).
  std::function<double(std::size_t epoch, const Params&)> validate;
  std::function<void(const EpochRecord&, const Params&)> on_epoch;
};

template <typename Params>
struct TrainResult {
  Params params;  // from best_epoch
  TrainHistory history;
};

/// Scores every node pair with the model in eval mode.
template <typename Model>
auto eval_scorer(const Model& model, const typename Model::Params& p, const ModelContext& ctx) {
  Rng unused(0);
  const auto cache = model.forward(p, ctx, 0.0, false, unused);
  return make_scorer(model, p, cache);
}

template <typename Model>
double validation_ndcg(const Model& model, const typename Model::Params& p, const ModelContext& ctx,
                       const std::vector<std::vector<NodeId>>& train_pos, const std::vector<std::vector<NodeId>>& rel,
                       std::size_t k) {
  return evaluate_scores(eval_scorer(model, p, ctx), *ctx.graph, train_pos, rel, k).ndcg_at_k;
}

/// Mini-batch training with Adam and early stopping on validation NDCG@k. The graph forward
/// runs over the full graph for every batch. Returns the parameters of the best epoch.
template <typename Model>
TrainResult<typename Model::Params> train(const Model& model, const TrainConfig& cfg, const TrainData& data,
                                          const TrainHooks<typename Model::Params>& hooks = {}) {
  using Params = typename Model::Params;
  cfg.validate();
  const InteractionGraph& g = *data.graph;
  Rng rng(cfg.seed);
  Params params = model.init(rng);

  const auto train_pos = items_by_user(*data.train, g.num_nodes());
  const auto val_rel = relevant_items(*data.val, train_pos, g.num_nodes());
  auto validate = [&](std::size_t epoch, const Params& p) {
    if (hooks.validate) return hooks.validate(epoch, p);
    return validation_ndcg(model, p, data.ctx, train_pos, val_rel, cfg.val_k);
  };

  TrainResult<Params> result;
  result.history.initial_val_ndcg = validate(0, params);
  result.params = params;

  const NegativeSampler sampler(g);
  std::vector<std::size_t> order(data.train->size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  AdamState adam;
  std::uint64_t step = 0;
  EarlyStopping stopper(cfg.patience);
  std::vector<Triple> batch;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);
    LossBreakdown sum;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      for (std::size_t k = start; k < end; ++k) {
        const auto& x = (*data.train)[order[k]];
        Triple t{x.user, x.item, sampler.sample(x.user, cfg.neg_per_pos, rng).items};
        if (!t.negs.empty()) batch.push_back(std::move(t));
      }
      if (batch.empty()) continue;
      Params grad = params.zeros_like();
      LossBreakdown l;
      try {
        l = total_loss(model, params, std::span<const Triple>(batch), data.ctx, cfg, rng, true, &grad);
        ++step;
        adam_step(params.tensors(), grad.tensors(), adam, cfg, step);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Numeric) throw;
        fail_numeric(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                     std::to_string(n_batches) + ")");
      }
      sum.total += l.total;
      sum.sup += l.sup;
      sum.pseudo += l.pseudo;
      sum.reg += l.reg;
      ++n_batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    if (n_batches) {
      const double inv = 1.0 / static_cast<double>(n_batches);
      rec.loss = {sum.total * inv, sum.sup * inv, sum.pseudo * inv, sum.reg * inv};
    }
    rec.val_ndcg = validate(epoch, params);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.epochs.push_back(rec);
    const bool stop = stopper.observe(epoch, rec.val_ndcg);
    if (stopper.improved()) result.params = params;
    if (hooks.on_epoch) hooks.on_epoch(rec, params);
    if (stop) {
      result.history.stopped_early = epoch < cfg.max_epochs;
      break;
    }
  }
  result.history.best_epoch = stopper.best_epoch();
  return result;
}

}  // namespace fusionrec
