#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fusionrec/common.hpp"
#include "fusionrec/data_model.hpp"
#include "fusionrec/tensor.hpp"

namespace fusionrec {

/// One single-head graph attention layer.
///   z_j      = W h_j
///   alpha_ij = softmax_{j in N(i)} LeakyReLU(a_src . z_i + a_dst . z_j)
///   h'_i     = ReLU(sum_j alpha_ij z_j)
/// `attn` holds [a_src | a_dst] as a 1 x 2*d_out row.
struct GatLayerParams {
  Matrix weight;  // d_out x d_in
  Matrix attn;    // 1 x 2*d_out
  double leaky_slope = 0.2;

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  static GatLayerParams init(std::size_t d_in, std::size_t d_out, double slope, Rng& rng) {
    GatLayerParams p{Matrix(d_out, d_in), Matrix(1, 2 * d_out), slope};
    init_uniform_fan(p.weight, static_cast<double>(d_in + d_out), rng);
    init_uniform_fan(p.attn, static_cast<double>(2 * d_out + 1), rng);
    return p;
  }

  GatLayerParams zeros_like() const {
    return {Matrix(weight.rows(), weight.cols()), Matrix(attn.rows(), attn.cols()), leaky_slope};
  }
};

/// Everything one layer's forward pass produced; the backward pass consumes it.
/// Edge-indexed arrays follow the graph's CSR edge order.
struct LayerActivation {
  Matrix input;        // N x d_in
  Matrix projected;    // z, N x d_out
  std::vector<double> src_score;  // a_src . z_i
  std::vector<double> dst_score;  // a_dst . z_j
  std::vector<double> alpha;      // per edge
  Matrix aggregate;    // pre-ReLU
  Matrix output;       // post-ReLU, post-dropout
  std::vector<double> dropout_scale;  // per output element; empty when dropout was off

  std::span<const double> alpha_row(const InteractionGraph& g, NodeId i) const {
    return {alpha.data() + g.edge_begin(i), g.edge_end(i) - g.edge_begin(i)};
  }
};

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

/// Softmax with max subtraction. Writes into `out`, which may alias `logits`.
inline void softmax_inplace(std::span<const double> logits, std::span<double> out) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - mx);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
}

namespace detail {

inline std::string node_layer(NodeId i, std::size_t layer) {
  return "node " + std::to_string(i) + ", layer " + std::to_string(layer);
}

inline void check_input(const GatLayerParams& layer, const InteractionGraph& g, const Matrix& h) {
  if (h.rows() != g.num_nodes())
    fail_data("GAT: feature table has " + std::to_string(h.rows()) + " rows, graph has " +
              std::to_string(g.num_nodes()) + " nodes");
  if (h.cols() != layer.in_dim())
    fail_data("GAT: input dimension " + std::to_string(h.cols()) + " does not match layer input " +
              std::to_string(layer.in_dim()));
  if (layer.attn.size() != 2 * layer.out_dim()) fail_data("GAT: attention vector has wrong length");
}

}  // namespace detail

/// Attention weights of node i over its neighborhood, as (neighbor, alpha) pairs.
inline std::vector<std::pair<NodeId, double>> attention_coefficients(const GatLayerParams& layer, const Matrix& h,
                                                                     const InteractionGraph& g, NodeId i,
                                                                     std::size_t layer_index = 0) {
  detail::check_input(layer, g, h);
  const std::size_t d = layer.out_dim();
  const std::span<const double> a_src(layer.attn.data().data(), d);
  const std::span<const double> a_dst(layer.attn.data().data() + d, d);
  std::vector<double> zi(d), zj(d);
  matvec(layer.weight, h.row(i), zi);
  const double si = dot(a_src, zi);
  auto nbrs = g.neighbors(i);
  std::vector<double> logits(nbrs.size());
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    matvec(layer.weight, h.row(nbrs[k]), zj);
    logits[k] = leaky_relu(si + dot(a_dst, zj), layer.leaky_slope);
    if (!std::isfinite(logits[k])) fail_numeric("non-finite attention logit at " + detail::node_layer(i, layer_index));
  }
  softmax_inplace(logits, logits);
  std::vector<std::pair<NodeId, double>> out;
  out.reserve(nbrs.size());
  for (std::size_t k = 0; k < nbrs.size(); ++k) out.emplace_back(nbrs[k], logits[k]);
  return out;
}

/// Forward pass of one layer. In train mode each output element is zeroed with probability
/// `dropout_p` and survivors scaled by 1/(1-p); eval mode applies neither.
inline LayerActivation gat_layer_forward(const GatLayerParams& layer, const InteractionGraph& g, const Matrix& h,
                                         double dropout_p, bool train_mode, Rng& rng,
                                         std::size_t layer_index = 0) {
  detail::check_input(layer, g, h);
  const std::size_t n = g.num_nodes();
  const std::size_t d = layer.out_dim();
  const std::span<const double> a_src(layer.attn.data().data(), d);
  const std::span<const double> a_dst(layer.attn.data().data() + d, d);

  LayerActivation act;
  act.input = h;
  act.projected = project_rows(h, layer.weight);
  act.src_score.resize(n);
  act.dst_score.resize(n);
  for (NodeId i = 0; i < n; ++i) {
    act.src_score[i] = dot(a_src, act.projected.row(i));
    act.dst_score[i] = dot(a_dst, act.projected.row(i));
  }
  act.alpha.resize(g.num_edges());
  act.aggregate = Matrix(n, d);
  for (NodeId i = 0; i < n; ++i) {
    const std::size_t b = g.edge_begin(i), e = g.edge_end(i);
    std::span<double> row(act.alpha.data() + b, e - b);
    for (std::size_t k = b; k < e; ++k) {
      row[k - b] = leaky_relu(act.src_score[i] + act.dst_score[g.edge_target(k)], layer.leaky_slope);
      if (!std::isfinite(row[k - b]))
        fail_numeric("non-finite attention logit at " + detail::node_layer(i, layer_index));
    }
    softmax_inplace(row, row);
    auto agg = act.aggregate.row(i);
    for (std::size_t k = b; k < e; ++k) {
      const double w = act.alpha[k];
      const auto zj = act.projected.row(g.edge_target(k));
      for (std::size_t c = 0; c < d; ++c) agg[c] += w * zj[c];
    }
  }
  act.output = act.aggregate;
  for (double& v : act.output.data()) v = v > 0.0 ? v : 0.0;
  if (train_mode && dropout_p > 0.0) {
    const double keep_scale = 1.0 / (1.0 - dropout_p);
    act.dropout_scale.resize(act.output.size());
    for (std::size_t k = 0; k < act.output.size(); ++k) {
      act.dropout_scale[k] = rng.uniform() < dropout_p ? 0.0 : keep_scale;
      act.output[k] *= act.dropout_scale[k];
    }
  }
  return act;
}

struct GnnForward {
  Matrix output;
  std::vector<LayerActivation> activations;
};

inline GnnForward gnn_forward(const std::vector<GatLayerParams>& layers, const InteractionGraph& g, const Matrix& h0,
                              double dropout_p, bool train_mode, Rng& rng) {
  GnnForward f;
  f.output = h0;
  f.activations.reserve(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    f.activations.push_back(gat_layer_forward(layers[l], g, f.output, dropout_p, train_mode, rng, l));
    f.output = f.activations.back().output;
  }
  return f;
}

struct LayerGrad {
  GatLayerParams params;  // gradient tensors, same shapes as the layer
  Matrix input;           // d loss / d layer input
};

/// Exact backward pass of one layer given d loss / d output.
inline LayerGrad gat_layer_backward(const GatLayerParams& layer, const InteractionGraph& g,
                                    const LayerActivation& act, const Matrix& grad_out) {
  const std::size_t n = g.num_nodes();
  const std::size_t d = layer.out_dim();
  if (!grad_out.same_shape(act.output) || act.projected.cols() != d || act.alpha.size() != g.num_edges())
    fail_data("GAT backward: activation cache does not match layer/graph shapes");
  const std::span<const double> a_src(layer.attn.data().data(), d);
  const std::span<const double> a_dst(layer.attn.data().data() + d, d);

  // Through dropout and ReLU.
  Matrix d_agg = grad_out;
  for (std::size_t k = 0; k < d_agg.size(); ++k) {
    if (!act.dropout_scale.empty()) d_agg[k] *= act.dropout_scale[k];
    if (act.aggregate[k] <= 0.0) d_agg[k] = 0.0;
  }

  Matrix d_z(n, d);
  std::vector<double> d_src(n, 0.0), d_dst(n, 0.0);
  std::vector<double> d_alpha;
  for (NodeId i = 0; i < n; ++i) {
    const std::size_t b = g.edge_begin(i), e = g.edge_end(i);
    const auto gi = d_agg.row(i);
    d_alpha.assign(e - b, 0.0);
    double weighted = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      const NodeId j = g.edge_target(k);
      const double a = act.alpha[k];
      auto dzj = d_z.row(j);
      for (std::size_t c = 0; c < d; ++c) dzj[c] += a * gi[c];
      d_alpha[k - b] = dot(gi, act.projected.row(j));
      weighted += a * d_alpha[k - b];
    }
    // Softmax Jacobian, then LeakyReLU.
    for (std::size_t k = b; k < e; ++k) {
      const NodeId j = g.edge_target(k);
      const double d_logit = act.alpha[k] * (d_alpha[k - b] - weighted);
      const double pre = act.src_score[i] + act.dst_score[j];
      const double d_pre = d_logit * (pre > 0.0 ? 1.0 : layer.leaky_slope);
      d_src[i] += d_pre;
      d_dst[j] += d_pre;
    }
  }

  LayerGrad out{layer.zeros_like(), Matrix(n, layer.in_dim())};
  auto da = out.params.attn.row(0);
  for (NodeId i = 0; i < n; ++i) {
    const auto zi = act.projected.row(i);
    auto dzi = d_z.row(i);
    for (std::size_t c = 0; c < d; ++c) {
      da[c] += d_src[i] * zi[c];
      da[d + c] += d_dst[i] * zi[c];
      dzi[c] += d_src[i] * a_src[c] + d_dst[i] * a_dst[c];
    }
    outer_acc(out.params.weight, dzi, act.input.row(i));
    matvec_t_acc(layer.weight, dzi, out.input.row(i));
  }
  return out;
}

struct GnnGrads {
  std::vector<GatLayerParams> layers;
  Matrix input;
};

inline GnnGrads gnn_backward(const std::vector<GatLayerParams>& layers, const InteractionGraph& g,
                             const std::vector<LayerActivation>& acts, const Matrix& grad_out) {
  if (acts.size() != layers.size()) fail_data("GNN backward: activation count does not match layer count");
  GnnGrads out;
  out.layers.resize(layers.size());
  Matrix grad = grad_out;
  for (std::size_t l = layers.size(); l-- > 0;) {
    LayerGrad lg = gat_layer_backward(layers[l], g, acts[l], grad);
    out.layers[l] = std::move(lg.params);
    grad = std::move(lg.input);
  }
  out.input = std::move(grad);
  return out;
}

}  // namespace fusionrec
