#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fusionrec/common.hpp"
#include "fusionrec/data_model.hpp"
#include "fusionrec/gat.hpp"
#include "fusionrec/tensor.hpp"

namespace fusionrec {

// ---------------------------------------------------------------------------
// Parameter blocks. Scalars are stored as 1x1 matrices so every learnable value is a tensor.

struct PseudoHeadParams {
  Matrix weight;  // 1 x d
  Matrix bias;    // 1 x 1
};

/// Late fusion operator. Either weight may be empty when that input is absent.
struct FusionParams {
  Matrix text_weight;   // d_f x d
  Matrix graph_weight;  // d_f x d_g
  Matrix bias;          // 1 x d_f
};

struct UnifierParams {
  Matrix weight;  // d_u x (d_s1 + d_s2)
  Matrix bias;    // 1 x d_u
};

/// One-hidden-layer MLP over [h_u | h_i].
struct ScoreHeadParams {
  Matrix w1;  // d_h x 2 d_u
  Matrix b1;  // 1 x d_h
  Matrix w2;  // 1 x d_h
  Matrix b2;  // 1 x 1
};

/// Pseudo-label prediction sigmoid(w . e + b).
inline double pseudo_label(std::span<const double> e, const PseudoHeadParams& head) {
  if (e.size() != head.weight.cols()) fail_data("pseudo_label: embedding dimension mismatch");
  return sigmoid(dot(head.weight.row(0), e) + head.bias[0]);
}

/// [e | y_hat]
inline std::vector<double> augment(std::span<const double> e, double y_hat) {
  std::vector<double> h(e.begin(), e.end());
  h.push_back(y_hat);
  return h;
}

/// ReLU(W_t h_text + W_g h_graph + b). Pass an empty span for an absent input.
inline std::vector<double> fuse(std::span<const double> h_text, std::span<const double> h_graph,
                                const FusionParams& p) {
  const std::size_t df = p.bias.cols();
  std::vector<double> out(p.bias.data());
  std::vector<double> tmp(df);
  if (!p.text_weight.empty()) {
    if (h_text.size() != p.text_weight.cols()) fail_data("fuse: text dimension mismatch");
    matvec(p.text_weight, h_text, tmp);
    for (std::size_t k = 0; k < df; ++k) out[k] += tmp[k];
  }
  if (!p.graph_weight.empty()) {
    if (h_graph.size() != p.graph_weight.cols()) fail_data("fuse: graph dimension mismatch");
    matvec(p.graph_weight, h_graph, tmp);
    for (std::size_t k = 0; k < df; ++k) out[k] += tmp[k];
  }
  for (double& v : out) v = v > 0.0 ? v : 0.0;
  return out;
}

/// w2 . ReLU(W1 [h_u | h_i] + b1) + b2
inline double score(std::span<const double> h_u, std::span<const double> h_i, const ScoreHeadParams& head) {
  const std::size_t du = h_u.size();
  if (h_i.size() != du || head.w1.cols() != 2 * du) fail_data("score: representation dimension mismatch");
  double s = head.b2[0];
  for (std::size_t r = 0; r < head.w1.rows(); ++r) {
    const auto wr = head.w1.row(r);
    double pre = head.b1[r];
    for (std::size_t c = 0; c < du; ++c) pre += wr[c] * h_u[c] + wr[du + c] * h_i[c];
    if (pre > 0.0) s += head.w2[r] * pre;
  }
  return s;
}

/// Accumulates gradients of `score` for upstream gradient ds.
inline void score_backward(std::span<const double> h_u, std::span<const double> h_i, const ScoreHeadParams& head,
                           double ds, ScoreHeadParams& grad, std::span<double> d_hu, std::span<double> d_hi) {
  const std::size_t du = h_u.size();
  grad.b2[0] += ds;
  for (std::size_t r = 0; r < head.w1.rows(); ++r) {
    const auto wr = head.w1.row(r);
    double pre = head.b1[r];
    for (std::size_t c = 0; c < du; ++c) pre += wr[c] * h_u[c] + wr[du + c] * h_i[c];
    if (pre <= 0.0) continue;
    grad.w2[r] += ds * pre;
    const double dpre = ds * head.w2[r];
    grad.b1[r] += dpre;
    auto gr = grad.w1.row(r);
    for (std::size_t c = 0; c < du; ++c) {
      gr[c] += dpre * h_u[c];
      gr[du + c] += dpre * h_i[c];
      d_hu[c] += dpre * wr[c];
      d_hi[c] += dpre * wr[du + c];
    }
  }
}

// ---------------------------------------------------------------------------
// Model variants

enum class Variant { Full, NoText, NoGraph, NoPseudo, GnnOnly, LlmOnly };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoText: return "no-text";
    case Variant::NoGraph: return "no-graph";
    case Variant::NoPseudo: return "no-pseudo";
    case Variant::GnnOnly: return "gnn-only";
    case Variant::LlmOnly: return "llm-only";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  for (Variant v : {Variant::Full, Variant::NoText, Variant::NoGraph, Variant::NoPseudo, Variant::GnnOnly,
                    Variant::LlmOnly})
    if (s == to_string(v)) return v;
  return std::nullopt;
}

/// Switches that realise each variant as a masking of the full two-stream model.
struct Architecture {
  bool stream_one = true;        // pseudo-label-augmented text through a GAT stack
  bool stream_two_graph = true;  // GAT over ID embeddings feeding the fusion operator
  bool stream_two_text = true;   // text term of the fusion operator
  bool text_from_ids = false;    // e_i replaced by trainable ID embeddings
  bool use_gat = true;           // false: GAT stacks become identity maps
  bool learned_pseudo = true;    // false: constant 0.5 appended instead of the pseudo head

  static Architecture of(Variant v) {
    Architecture a;
    switch (v) {
      case Variant::Full: break;
      case Variant::NoText: a.text_from_ids = true; break;
      case Variant::NoGraph: a.use_gat = false; break;
      case Variant::NoPseudo: a.learned_pseudo = false; break;
      case Variant::GnnOnly:
        a.stream_one = false;
        a.stream_two_text = false;
        a.learned_pseudo = false;
        break;
      case Variant::LlmOnly:
        a.stream_one = false;
        a.stream_two_graph = false;
        a.learned_pseudo = false;
        break;
    }
    return a;
  }

  bool needs_ids() const { return stream_two_graph || text_from_ids; }
  bool has_pseudo_head() const { return stream_one && learned_pseudo; }
};

struct HybridParams {
  Matrix id_embeddings;  // N x d
  std::vector<GatLayerParams> stream_one;
  std::vector<GatLayerParams> stream_two;
  PseudoHeadParams pseudo;
  FusionParams fusion;
  UnifierParams unifier;
  ScoreHeadParams score;

  /// Non-empty tensors in a fixed order; names are stable checkpoint keys.
  std::vector<TensorRef> tensors() {
    std::vector<TensorRef> out;
    auto add = [&](std::string name, Matrix& m, bool bias) {
      if (!m.empty()) out.push_back({std::move(name), &m, bias});
    };
    add("id_embeddings", id_embeddings, false);
    for (std::size_t l = 0; l < stream_one.size(); ++l) {
      add("stream_one." + std::to_string(l) + ".weight", stream_one[l].weight, false);
      add("stream_one." + std::to_string(l) + ".attn", stream_one[l].attn, false);
    }
    for (std::size_t l = 0; l < stream_two.size(); ++l) {
      add("stream_two." + std::to_string(l) + ".weight", stream_two[l].weight, false);
      add("stream_two." + std::to_string(l) + ".attn", stream_two[l].attn, false);
    }
    add("pseudo.weight", pseudo.weight, false);
    add("pseudo.bias", pseudo.bias, true);
    add("fusion.text_weight", fusion.text_weight, false);
    add("fusion.graph_weight", fusion.graph_weight, false);
    add("fusion.bias", fusion.bias, true);
    add("unifier.weight", unifier.weight, false);
    add("unifier.bias", unifier.bias, true);
    add("score.w1", score.w1, false);
    add("score.b1", score.b1, true);
    add("score.w2", score.w2, false);
    add("score.b2", score.b2, true);
    return out;
  }

  std::vector<ConstTensorRef> tensors() const {
    std::vector<ConstTensorRef> out;
    for (auto& t : const_cast<HybridParams*>(this)->tensors()) out.push_back({t.name, t.tensor, t.is_bias});
    return out;
  }

  HybridParams zeros_like() const {
    HybridParams z = *this;
    for (auto& t : z.tensors()) t.tensor->set_zero();
    return z;
  }
};

/// Inputs shared by every forward pass: the train graph, the text table e (N x d) and the
/// pseudo-label targets.
struct ModelContext {
  const InteractionGraph* graph = nullptr;
  const Matrix* text = nullptr;
  const std::vector<double>* pseudo_targets = nullptr;
};

struct ModelShape {
  std::size_t n_nodes = 0;
  std::size_t text_dim = 32;  // d
  std::size_t hidden = 32;    // GAT widths, d_g, d_f, d_u, d_h
  std::size_t gnn_layers = 3;
  double leaky_slope = 0.2;
};

/// Intermediates of one forward pass over the whole graph.
struct HybridCache {
  Matrix text;                      // e actually used (text table or ID embeddings)
  std::vector<double> pseudo_logit;  // per node; empty without a pseudo head
  std::vector<double> y_hat;         // per node
  GnnForward stream_one;             // output = h*(1)
  Matrix graph_features;             // h_graph
  GnnForward stream_two_gnn;
  Matrix fusion_pre;                 // before ReLU
  Matrix stream_two;                 // h*(2)
  std::vector<double> fusion_dropout;
  Matrix concat;                     // [h*(1) | h*(2)]
  Matrix repr;                       // h*
};

/// The two-stream text/graph model. Parameters live outside so the trainer can snapshot them.
class HybridModel {
 public:
  using Params = HybridParams;
  using Cache = HybridCache;

  HybridModel(ModelShape shape, Variant variant) : shape_(shape), variant_(variant), arch_(Architecture::of(variant)) {}

  const ModelShape& shape() const { return shape_; }
  Variant variant() const { return variant_; }
  const Architecture& arch() const { return arch_; }
  bool has_pseudo_head() const { return arch_.has_pseudo_head(); }

  std::size_t stream_one_dim() const {
    if (!arch_.stream_one) return 0;
    return arch_.use_gat && shape_.gnn_layers > 0 ? shape_.hidden : shape_.text_dim + 1;
  }
  std::size_t stream_two_dim() const { return shape_.hidden; }
  std::size_t graph_feature_dim() const {
    return arch_.use_gat && shape_.gnn_layers > 0 ? shape_.hidden : id_dim();
  }
  std::size_t id_dim() const { return arch_.text_from_ids ? shape_.text_dim : shape_.hidden; }

  Params init(Rng& rng) const {
    const std::size_t d = shape_.text_dim, h = shape_.hidden;
    auto fan_init = [&](std::size_t rows, std::size_t cols) {
      Matrix m(rows, cols);
      init_uniform_fan(m, static_cast<double>(rows + cols), rng);
      return m;
    };
    Params p;
    if (arch_.needs_ids()) {
      p.id_embeddings = Matrix(shape_.n_nodes, id_dim());
      init_uniform_fan(p.id_embeddings, static_cast<double>(2 * id_dim()), rng);
    }
    if (arch_.stream_one && arch_.use_gat) {
      std::size_t in = d + 1;
      for (std::size_t l = 0; l < shape_.gnn_layers; ++l, in = h)
        p.stream_one.push_back(GatLayerParams::init(in, h, shape_.leaky_slope, rng));
    }
    if (arch_.stream_two_graph && arch_.use_gat) {
      std::size_t in = id_dim();
      for (std::size_t l = 0; l < shape_.gnn_layers; ++l, in = h)
        p.stream_two.push_back(GatLayerParams::init(in, h, shape_.leaky_slope, rng));
    }
    if (arch_.has_pseudo_head()) {
      p.pseudo.weight = fan_init(1, d);
      p.pseudo.bias = Matrix(1, 1);
    }
    if (arch_.stream_two_text) p.fusion.text_weight = fan_init(h, d);
    if (arch_.stream_two_graph) p.fusion.graph_weight = fan_init(h, graph_feature_dim());
    p.fusion.bias = Matrix(1, h);
    p.unifier.weight = fan_init(h, stream_one_dim() + stream_two_dim());
    p.unifier.bias = Matrix(1, h);
    p.score.w1 = fan_init(h, 2 * h);
    p.score.b1 = Matrix(1, h);
    p.score.w2 = fan_init(1, h);
    p.score.b2 = Matrix(1, 1);
    return p;
  }

  /// Full-graph forward pass producing h* for every node.
  Cache forward(const Params& p, const ModelContext& ctx, double dropout_p, bool train_mode, Rng& rng) const {
    const InteractionGraph& g = *ctx.graph;
    const std::size_t n = g.num_nodes();
    if (n != shape_.n_nodes) fail_data("model built for " + std::to_string(shape_.n_nodes) + " nodes, graph has " +
                                       std::to_string(n));
    Cache c;
    c.text = arch_.text_from_ids ? p.id_embeddings : *ctx.text;
    if (c.text.cols() != shape_.text_dim || c.text.rows() != n)
      fail_data("text embedding table is " + shape_str(c.text) + ", model expects " + std::to_string(n) + "x" +
                std::to_string(shape_.text_dim));
    const std::size_t d = shape_.text_dim;

    if (arch_.stream_one) {
      c.y_hat.assign(n, 0.5);
      if (arch_.learned_pseudo) {
        c.pseudo_logit.resize(n);
        for (NodeId i = 0; i < n; ++i) {
          c.pseudo_logit[i] = dot(p.pseudo.weight.row(0), c.text.row(i)) + p.pseudo.bias[0];
          c.y_hat[i] = sigmoid(c.pseudo_logit[i]);
        }
      }
      Matrix h0(n, d + 1);
      for (NodeId i = 0; i < n; ++i) {
        auto r = h0.row(i);
        std::copy(c.text.row(i).begin(), c.text.row(i).end(), r.begin());
        r[d] = c.y_hat[i];
      }
      if (arch_.use_gat) c.stream_one = gnn_forward(p.stream_one, g, h0, dropout_p, train_mode, rng);
      else c.stream_one.output = std::move(h0);
    }

    {
      const std::size_t df = shape_.hidden;
      c.fusion_pre = Matrix(n, df);
      for (NodeId i = 0; i < n; ++i) std::copy(p.fusion.bias.data().begin(), p.fusion.bias.data().end(),
                                               c.fusion_pre.row(i).begin());
      std::vector<double> tmp(df);
      if (arch_.stream_two_graph) {
        if (arch_.use_gat) {
          c.stream_two_gnn = gnn_forward(p.stream_two, g, p.id_embeddings, dropout_p, train_mode, rng);
          c.graph_features = c.stream_two_gnn.output;
        } else {
          c.graph_features = p.id_embeddings;
        }
        for (NodeId i = 0; i < n; ++i) {
          matvec(p.fusion.graph_weight, c.graph_features.row(i), tmp);
          auto r = c.fusion_pre.row(i);
          for (std::size_t k = 0; k < df; ++k) r[k] += tmp[k];
        }
      }
      if (arch_.stream_two_text) {
        for (NodeId i = 0; i < n; ++i) {
          matvec(p.fusion.text_weight, c.text.row(i), tmp);
          auto r = c.fusion_pre.row(i);
          for (std::size_t k = 0; k < df; ++k) r[k] += tmp[k];
        }
      }
      c.stream_two = c.fusion_pre;
      for (double& v : c.stream_two.data()) v = v > 0.0 ? v : 0.0;
      if (train_mode && dropout_p > 0.0) {
        const double keep = 1.0 / (1.0 - dropout_p);
        c.fusion_dropout.resize(c.stream_two.size());
        for (std::size_t k = 0; k < c.stream_two.size(); ++k) {
          c.fusion_dropout[k] = rng.uniform() < dropout_p ? 0.0 : keep;
          c.stream_two[k] *= c.fusion_dropout[k];
        }
      }
    }

    const std::size_t d1 = stream_one_dim(), d2 = stream_two_dim();
    c.concat = Matrix(n, d1 + d2);
    for (NodeId i = 0; i < n; ++i) {
      auto r = c.concat.row(i);
      if (d1) std::copy(c.stream_one.output.row(i).begin(), c.stream_one.output.row(i).end(), r.begin());
      std::copy(c.stream_two.row(i).begin(), c.stream_two.row(i).end(), r.begin() + static_cast<std::ptrdiff_t>(d1));
    }
    c.repr = project_rows(c.concat, p.unifier.weight);
    for (NodeId i = 0; i < n; ++i) {
      auto r = c.repr.row(i);
      for (std::size_t k = 0; k < r.size(); ++k) r[k] += p.unifier.bias[k];
    }
    return c;
  }

  double score(const Params& p, std::span<const double> h_u, std::span<const double> h_i) const {
    return fusionrec::score(h_u, h_i, p.score);
  }

  void score_backward(const Params& p, std::span<const double> h_u, std::span<const double> h_i, double ds,
                      Params& grad, std::span<double> d_hu, std::span<double> d_hi) const {
    fusionrec::score_backward(h_u, h_i, p.score, ds, grad.score, d_hu, d_hi);
  }

  /// Backpropagates d loss / d h* (and d loss / d pseudo logit) into `grad`.
  void backward(const Params& p, const ModelContext& ctx, const Cache& c, const Matrix& d_repr,
                std::span<const double> d_pseudo_logit, Params& grad) const {
    const InteractionGraph& g = *ctx.graph;
    const std::size_t n = g.num_nodes();
    const std::size_t d = shape_.text_dim;
    const std::size_t d1 = stream_one_dim(), d2 = stream_two_dim();
    if (!d_repr.same_shape(c.repr)) fail_data("model backward: gradient shape does not match cached h*");

    Matrix d_concat(n, d1 + d2);
    for (NodeId i = 0; i < n; ++i) {
      const auto gi = d_repr.row(i);
      outer_acc(grad.unifier.weight, gi, c.concat.row(i));
      for (std::size_t k = 0; k < gi.size(); ++k) grad.unifier.bias[k] += gi[k];
      matvec_t_acc(p.unifier.weight, gi, d_concat.row(i));
    }

    Matrix d_text(n, d);
    Matrix d_ids;
    if (arch_.needs_ids()) d_ids = Matrix(n, id_dim());

    // Stream two: fusion operator, then the graph GAT.
    {
      const std::size_t df = d2;
      Matrix d_pre(n, df);
      for (NodeId i = 0; i < n; ++i)
        for (std::size_t k = 0; k < df; ++k) {
          const std::size_t flat = i * df + k;
          double v = d_concat(i, d1 + k);
          if (!c.fusion_dropout.empty()) v *= c.fusion_dropout[flat];
          d_pre[flat] = c.fusion_pre[flat] > 0.0 ? v : 0.0;
        }
      for (NodeId i = 0; i < n; ++i) {
        const auto gi = d_pre.row(i);
        for (std::size_t k = 0; k < df; ++k) grad.fusion.bias[k] += gi[k];
        if (arch_.stream_two_text) {
          outer_acc(grad.fusion.text_weight, gi, c.text.row(i));
          matvec_t_acc(p.fusion.text_weight, gi, d_text.row(i));
        }
      }
      if (arch_.stream_two_graph) {
        Matrix d_graph(n, c.graph_features.cols());
        for (NodeId i = 0; i < n; ++i) {
          outer_acc(grad.fusion.graph_weight, d_pre.row(i), c.graph_features.row(i));
          matvec_t_acc(p.fusion.graph_weight, d_pre.row(i), d_graph.row(i));
        }
        if (arch_.use_gat) {
          GnnGrads gg = gnn_backward(p.stream_two, g, c.stream_two_gnn.activations, d_graph);
          add_layer_grads(grad.stream_two, gg.layers);
          add_into(d_ids, gg.input);
        } else {
          add_into(d_ids, d_graph);
        }
      }
    }

    // Stream one: GAT stack over [e | y_hat], then the pseudo head.
    if (arch_.stream_one) {
      Matrix d_s1(n, d1);
      for (NodeId i = 0; i < n; ++i)
        for (std::size_t k = 0; k < d1; ++k) d_s1(i, k) = d_concat(i, k);
      Matrix d_h0;
      if (arch_.use_gat) {
        GnnGrads gg = gnn_backward(p.stream_one, g, c.stream_one.activations, d_s1);
        add_layer_grads(grad.stream_one, gg.layers);
        d_h0 = std::move(gg.input);
      } else {
        d_h0 = std::move(d_s1);
      }
      for (NodeId i = 0; i < n; ++i) {
        auto dt = d_text.row(i);
        const auto dh = d_h0.row(i);
        for (std::size_t k = 0; k < d; ++k) dt[k] += dh[k];
        if (arch_.learned_pseudo) {
          const double y = c.y_hat[i];
          double dz = dh[d] * y * (1.0 - y);
          if (!d_pseudo_logit.empty()) dz += d_pseudo_logit[i];
          if (dz == 0.0) continue;
          grad.pseudo.bias[0] += dz;
          auto gw = grad.pseudo.weight.row(0);
          const auto ti = c.text.row(i);
          for (std::size_t k = 0; k < d; ++k) {
            gw[k] += dz * ti[k];
            dt[k] += dz * p.pseudo.weight[k];
          }
        }
      }
    }

    if (arch_.text_from_ids) add_into(d_ids, d_text);
    if (arch_.needs_ids()) add_into(grad.id_embeddings, d_ids);
  }

 private:
  static void add_into(Matrix& dst, const Matrix& src) {
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
  static void add_layer_grads(std::vector<GatLayerParams>& dst, const std::vector<GatLayerParams>& src) {
    for (std::size_t l = 0; l < dst.size(); ++l) {
      add_into(dst[l].weight, src[l].weight);
      add_into(dst[l].attn, src[l].attn);
    }
  }

  ModelShape shape_;
  Variant variant_;
  Architecture arch_;
};

/// Fast all-pairs scoring for the hybrid score head: W1 [h_u | h_i] is split into per-node
/// halves computed once.
class HybridScorer {
 public:
  HybridScorer(const HybridParams& p, const Matrix& repr) : head_(p.score) {
    const std::size_t du = repr.cols(), dh = head_.w1.rows();
    Matrix wu(dh, du), wi(dh, du);
    for (std::size_t r = 0; r < dh; ++r)
      for (std::size_t c = 0; c < du; ++c) {
        wu(r, c) = head_.w1(r, c);
        wi(r, c) = head_.w1(r, du + c);
      }
    user_part_ = project_rows(repr, wu);
    item_part_ = project_rows(repr, wi);
  }

  double operator()(NodeId u, NodeId i) const {
    const auto a = user_part_.row(u);
    const auto b = item_part_.row(i);
    double s = head_.b2[0];
    for (std::size_t r = 0; r < a.size(); ++r) {
      const double pre = head_.b1[r] + a[r] + b[r];
      if (pre > 0.0) s += head_.w2[r] * pre;
    }
    return s;
  }

 private:
  ScoreHeadParams head_;
  Matrix user_part_;
  Matrix item_part_;
};

inline HybridScorer make_scorer(const HybridModel&, const HybridParams& p, const HybridCache& c) {
  return HybridScorer(p, c.repr);
}

}  // namespace fusionrec
