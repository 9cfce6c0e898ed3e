#pragma once

#include <span>
#include <vector>

#include "fusionrec/fusion_head.hpp"
#include "fusionrec/tensor.hpp"

namespace fusionrec {

// Matrix factorisation baseline: one latent vector per node, score = p_u . q_i.
// No graph, no text. Trained with the same loss and loop as the hybrid model.

struct MfParams {
  Matrix factors;  // N x d

  std::vector<TensorRef> tensors() { return {{"factors", &factors, false}}; }
  std::vector<ConstTensorRef> tensors() const { return {{"factors", &factors, false}}; }
  MfParams zeros_like() const { return {Matrix(factors.rows(), factors.cols())}; }
};

struct MfCache {
  Matrix repr;
  std::vector<double> pseudo_logit;  // always empty
};

class MfModel {
 public:
  using Params = MfParams;
  using Cache = MfCache;

  MfModel(std::size_t n_nodes, std::size_t dim) : n_nodes_(n_nodes), dim_(dim) {}

  bool has_pseudo_head() const { return false; }
  std::size_t dim() const { return dim_; }

  Params init(Rng& rng) const {
    Params p{Matrix(n_nodes_, dim_)};
    init_uniform_fan(p.factors, static_cast<double>(2 * dim_), rng);
    return p;
  }

  Cache forward(const Params& p, const ModelContext& ctx, double, bool, Rng&) const {
    if (ctx.graph && ctx.graph->num_nodes() != p.factors.rows()) fail_data("MF: node count mismatch");
    return {p.factors, {}};
  }

  double score(const Params&, std::span<const double> h_u, std::span<const double> h_i) const { return dot(h_u, h_i); }

  void score_backward(const Params&, std::span<const double> h_u, std::span<const double> h_i, double ds, Params&,
                      std::span<double> d_hu, std::span<double> d_hi) const {
    for (std::size_t k = 0; k < h_u.size(); ++k) {
      d_hu[k] += ds * h_i[k];
      d_hi[k] += ds * h_u[k];
    }
  }

  void backward(const Params&, const ModelContext&, const Cache&, const Matrix& d_repr, std::span<const double>,
                Params& grad) const {
    for (std::size_t k = 0; k < d_repr.size(); ++k) grad.factors[k] += d_repr[k];
  }

 private:
  std::size_t n_nodes_;
  std::size_t dim_;
};

class MfScorer {
 public:
  explicit MfScorer(const Matrix& factors) : f_(factors) {}
  double operator()(NodeId u, NodeId i) const { return dot(f_.row(u), f_.row(i)); }

 private:
  Matrix f_;
};

inline MfScorer make_scorer(const MfModel&, const MfParams&, const MfCache& c) { return MfScorer(c.repr); }

}  // namespace fusionrec
