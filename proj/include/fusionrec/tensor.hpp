#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fusionrec/common.hpp"

namespace fusionrec {

/// Row-major dense matrix of doubles. Node feature tables are stored one node per row.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  void set_zero() { std::fill(data_.begin(), data_.end(), 0.0); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return s;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

// out = W x (W: m x n, x: n)
inline void matvec(const Matrix& w, std::span<const double> x, std::span<double> out) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto wr = w.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < wr.size(); ++c) s += wr[c] * x[c];
    out[r] = s;
  }
}

// out += W^T g
inline void matvec_t_acc(const Matrix& w, std::span<const double> g, std::span<double> out) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto wr = w.row(r);
    const double gr = g[r];
    if (gr == 0.0) continue;
    for (std::size_t c = 0; c < wr.size(); ++c) out[c] += wr[c] * gr;
  }
}

// dW += g x^T
inline void outer_acc(Matrix& dw, std::span<const double> g, std::span<const double> x) {
  for (std::size_t r = 0; r < dw.rows(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    auto dr = dw.row(r);
    for (std::size_t c = 0; c < dr.size(); ++c) dr[c] += gr * x[c];
  }
}

/// Y = X W^T for a node table X (N x n) and weight W (m x n).
inline Matrix project_rows(const Matrix& x, const Matrix& w) {
  Matrix y(x.rows(), w.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) matvec(w, x.row(i), y.row(i));
  return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ln(sigmoid(x)) without overflow
inline double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// Seeded generator whose outputs are identical on every platform: mt19937_64 is fully
/// specified, and the distributions below avoid the implementation-defined std ones.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Fan-scaled uniform init on [-sqrt(6/fan), +sqrt(6/fan)].
inline void init_uniform_fan(Matrix& m, double fan, Rng& rng) {
  const double bound = std::sqrt(6.0 / fan);
  for (double& v : m.data()) v = rng.uniform(-bound, bound);
}

/// A named view onto one learnable tensor. Biases are tracked so the L2 term can skip them.
struct TensorRef {
  std::string name;
  Matrix* tensor;
  bool is_bias;
};

struct ConstTensorRef {
  std::string name;
  const Matrix* tensor;
  bool is_bias;
};

}  // namespace fusionrec
