#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vdn/nn/errors.hpp"
#include "vdn/nn/param.hpp"

namespace vdn::nn {

using Rng = std::mt19937_64;

// Layers hold parameters only. Activations needed by the backward pass are
// kept in caller-owned caches so that one layer can be applied several times
// per step (weight sharing across agents).

template <typename T>
void init_uniform_fan_in(BasicParam<T>& p, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (auto& v : p.value.data()) v = static_cast<T>(dist(rng));
}

// Column-major views used by the batched kernels. A batch of B vectors of
// length n is stored as B consecutive columns.
template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>>;
template <typename T>
using WeightMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstWeightMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using VecMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstVecMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>;

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out)
      : weight_(name + ".weight", {out, in}), bias_(name + ".bias", {out}) {}

  std::size_t in_features() const { return weight_.value.cols(); }
  std::size_t out_features() const { return weight_.value.rows(); }

  void init(Rng& rng) {
    init_uniform_fan_in(weight_, in_features(), rng);
    bias_.value.fill(T{0});
  }

  // y = W x + b for each of the batch columns in x.
  void forward(std::span<const T> x, std::span<T> y) const {
    const std::size_t batch = check(x.size(), y.size());
    const std::size_t in = in_features();
    const std::size_t out = out_features();
    MatMap<T> Y(y.data(), out, batch);
    Y.noalias() = weights() * ConstMatMap<T>(x.data(), in, batch);
    Y.colwise() += ConstVecMap<T>(bias_.value.raw(), out);
  }

  // Accumulates dW += dy x^T, db += dy (summed over the batch), and
  // dx += W^T dy when dx is non-empty.
  void backward(std::span<const T> x, std::span<const T> dy, std::span<T> dx) {
    const std::size_t batch = check(x.size(), dy.size());
    const std::size_t in = in_features();
    const std::size_t out = out_features();
    ConstMatMap<T> X(x.data(), in, batch);
    ConstMatMap<T> DY(dy.data(), out, batch);
    WeightMap<T>(weight_.grad.raw(), out, in).noalias() += DY * X.transpose();
    VecMap<T>(bias_.grad.raw(), out) += DY.rowwise().sum();
    if (!dx.empty()) {
      if (dx.size() != x.size()) throw ConfigError("linear layer '" + weight_.name + "': dx size mismatch");
      MatMap<T>(dx.data(), in, batch).noalias() += weights().transpose() * DY;
    }
  }

  BasicParam<T>& weight() { return weight_; }
  BasicParam<T>& bias() { return bias_; }
  const BasicParam<T>& weight() const { return weight_; }
  const BasicParam<T>& bias() const { return bias_; }

  void collect(ParamList<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  ConstWeightMap<T> weights() const {
    return ConstWeightMap<T>(weight_.value.raw(), out_features(), in_features());
  }

  // Returns the batch size implied by the input length.
  std::size_t check(std::size_t xs, std::size_t ys) const {
    const std::size_t in = in_features();
    const std::size_t out = out_features();
    if (xs == 0 || xs % in != 0 || ys != xs / in * out) {
      throw ConfigError("linear layer '" + weight_.name + "' expects " + std::to_string(in) +
                        " -> " + std::to_string(out) + ", got " + std::to_string(xs) + " -> " +
                        std::to_string(ys));
    }
    return xs / in;
  }

  BasicParam<T> weight_;
  BasicParam<T> bias_;
};

template <typename T>
void relu(std::span<const T> x, std::span<T> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T{0} ? x[i] : T{0};
}

// dx = dy where the pre-activation was positive, 0 elsewhere.
template <typename T>
void relu_backward(std::span<const T> pre, std::span<const T> dy, std::span<T> dx) {
  for (std::size_t i = 0; i < pre.size(); ++i) dx[i] = pre[i] > T{0} ? dy[i] : T{0};
}

template <typename T>
T sigmoid(T x) {
  return T{1} / (T{1} + std::exp(-x));
}

template <typename T>
struct LstmState {
  std::vector<T> h;
  std::vector<T> c;

  LstmState() = default;
  explicit LstmState(std::size_t hidden) : h(hidden, T{0}), c(hidden, T{0}) {}

  void zero() {
    std::fill(h.begin(), h.end(), T{0});
    std::fill(c.begin(), c.end(), T{0});
  }
  bool all_finite() const {
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (!std::isfinite(h[i]) || !std::isfinite(c[i])) return false;
    }
    return true;
  }
  template <typename U>
  LstmState<U> cast() const {
    LstmState<U> out;
    out.h.assign(h.begin(), h.end());
    out.c.assign(c.begin(), c.end());
    return out;
  }
  bool operator==(const LstmState&) const = default;
};

// Per-step activations kept for backpropagation through time, one column
// per batch entry.
template <typename T>
struct LstmStepCache {
  std::vector<T> xh;  // [x, h_prev]
  std::vector<T> pre;  // gate pre-activations
  std::vector<T> c_prev;
  std::vector<T> i, f, g, o;
  std::vector<T> c;
  std::vector<T> tanh_c;
  std::size_t batch = 0;

  void resize(std::size_t in, std::size_t hidden, std::size_t columns = 1) {
    batch = columns;
    xh.resize((in + hidden) * columns);
    pre.resize(4 * hidden * columns);
    c_prev.resize(hidden * columns);
    i.resize(hidden * columns);
    f.resize(hidden * columns);
    g.resize(hidden * columns);
    o.resize(hidden * columns);
    c.resize(hidden * columns);
    tanh_c.resize(hidden * columns);
  }
};

// Standard LSTM cell without peepholes. Gate rows are stacked as
// [input, forget, candidate, output] in one (4H x (in + H)) matrix.
template <typename T>
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(const std::string& name, std::size_t in, std::size_t hidden)
      : in_(in),
        hidden_(hidden),
        weight_(name + ".weight", {4 * hidden, in + hidden}),
        bias_(name + ".bias", {4 * hidden}) {}

  std::size_t in_features() const { return in_; }
  std::size_t hidden_size() const { return hidden_; }

  void init(Rng& rng) {
    init_uniform_fan_in(weight_, in_ + hidden_, rng);
    bias_.value.fill(T{0});
    for (std::size_t k = 0; k < hidden_; ++k) bias_.value[hidden_ + k] = T{1};
  }

  // Batched over the columns of x; the state holds the same number of
  // columns. `prev` and `next` may be the same object.
  void forward(std::span<const T> x, const LstmState<T>& prev, LstmState<T>& next,
               LstmStepCache<T>& cache) const {
    const std::size_t H = hidden_;
    const std::size_t batch = x.size() / in_;
    if (x.empty() || x.size() != in_ * batch || prev.h.size() != H * batch ||
        prev.c.size() != H * batch) {
      throw ConfigError("lstm '" + weight_.name + "' expects input " + std::to_string(in_) +
                        " and state " + std::to_string(hidden_) + ", got " +
                        std::to_string(x.size()) + " / " + std::to_string(prev.h.size()));
    }
    const std::size_t width = in_ + H;
    cache.resize(in_, H, batch);
    for (std::size_t b = 0; b < batch; ++b) {
      T* col = cache.xh.data() + b * width;
      std::copy_n(x.data() + b * in_, in_, col);
      std::copy_n(prev.h.data() + b * H, H, col + in_);
    }
    std::copy(prev.c.begin(), prev.c.end(), cache.c_prev.begin());

    MatMap<T> pre(cache.pre.data(), 4 * H, batch);
    pre.noalias() = ConstWeightMap<T>(weight_.value.raw(), 4 * H, width) *
                    ConstMatMap<T>(cache.xh.data(), width, batch);
    pre.colwise() += ConstVecMap<T>(bias_.value.raw(), 4 * H);

    next.h.resize(H * batch);
    next.c.resize(H * batch);
    for (std::size_t b = 0; b < batch; ++b) {
      const T* p = cache.pre.data() + b * 4 * H;
      const std::size_t o = b * H;
      for (std::size_t k = 0; k < H; ++k) {
        cache.i[o + k] = sigmoid(p[k]);
        cache.f[o + k] = sigmoid(p[H + k]);
        cache.g[o + k] = std::tanh(p[2 * H + k]);
        cache.o[o + k] = sigmoid(p[3 * H + k]);
      }
    }
    for (std::size_t k = 0; k < H * batch; ++k) {
      const T c = cache.f[k] * cache.c_prev[k] + cache.i[k] * cache.g[k];
      const T tc = std::tanh(c);
      cache.c[k] = c;
      cache.tanh_c[k] = tc;
      next.c[k] = c;
      next.h[k] = cache.o[k] * tc;
    }
  }

  // dh: gradient w.r.t. h_t (all consumers, including the next step).
  // dc: gradient w.r.t. c_t arriving from the next step.
  // Accumulates parameter gradients, adds into dx, overwrites dh_prev/dc_prev.
  void backward(const LstmStepCache<T>& cache, std::span<const T> dh, std::span<const T> dc,
                std::span<T> dx, std::span<T> dh_prev, std::span<T> dc_prev) {
    const std::size_t H = hidden_;
    const std::size_t batch = cache.batch;
    const std::size_t width = in_ + H;
    if (dh.size() != H * batch || dc.size() != H * batch || dh_prev.size() != H * batch ||
        dc_prev.size() != H * batch || (!dx.empty() && dx.size() != in_ * batch)) {
      throw ConfigError("lstm '" + weight_.name + "' backward: gradient shape mismatch");
    }
    dgates_.resize(4 * H * batch);
    for (std::size_t b = 0; b < batch; ++b) {
      T* dg = dgates_.data() + b * 4 * H;
      for (std::size_t k = 0; k < H; ++k) {
        const std::size_t n = b * H + k;
        const T tc = cache.tanh_c[n];
        const T dct = dc[n] + dh[n] * cache.o[n] * (T{1} - tc * tc);
        const T d_o = dh[n] * tc;
        const T d_i = dct * cache.g[n];
        const T d_f = dct * cache.c_prev[n];
        const T d_g = dct * cache.i[n];
        dc_prev[n] = dct * cache.f[n];
        dg[k] = d_i * cache.i[n] * (T{1} - cache.i[n]);
        dg[H + k] = d_f * cache.f[n] * (T{1} - cache.f[n]);
        dg[2 * H + k] = d_g * (T{1} - cache.g[n] * cache.g[n]);
        dg[3 * H + k] = d_o * cache.o[n] * (T{1} - cache.o[n]);
      }
    }
    ConstMatMap<T> DG(dgates_.data(), 4 * H, batch);
    ConstMatMap<T> XH(cache.xh.data(), width, batch);
    WeightMap<T>(weight_.grad.raw(), 4 * H, width).noalias() += DG * XH.transpose();
    VecMap<T>(bias_.grad.raw(), 4 * H) += DG.rowwise().sum();
    dxh_.resize(width * batch);
    MatMap<T>(dxh_.data(), width, batch).noalias() =
        ConstWeightMap<T>(weight_.value.raw(), 4 * H, width).transpose() * DG;
    for (std::size_t b = 0; b < batch; ++b) {
      const T* col = dxh_.data() + b * width;
      if (!dx.empty()) {
        T* out = dx.data() + b * in_;
        for (std::size_t k = 0; k < in_; ++k) out[k] += col[k];
      }
      std::copy_n(col + in_, H, dh_prev.data() + b * H);
    }
  }

  BasicParam<T>& weight() { return weight_; }
  BasicParam<T>& bias() { return bias_; }
  const BasicParam<T>& weight() const { return weight_; }
  const BasicParam<T>& bias() const { return bias_; }

  void collect(ParamList<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  std::size_t in_ = 0;
  std::size_t hidden_ = 0;
  BasicParam<T> weight_;
  BasicParam<T> bias_;
  std::vector<T> dgates_;
  std::vector<T> dxh_;
};

// Q[i] = v + a[i]
template <typename T>
void dueling_combine(T v, std::span<const T> a, std::span<T> q) {
  for (std::size_t i = 0; i < a.size(); ++i) q[i] = v + a[i];
}

// Linear value and advantage streams combined by dueling_combine.
template <typename T>
class DuelingHead {
 public:
  DuelingHead() = default;
  DuelingHead(const std::string& name, std::size_t in, std::size_t actions)
      : value_(name + ".value", in, 1), advantage_(name + ".advantage", in, actions) {}

  std::size_t in_features() const { return value_.in_features(); }
  std::size_t num_actions() const { return advantage_.out_features(); }

  void init(Rng& rng) {
    value_.init(rng);
    advantage_.init(rng);
  }

  // Batched like Linear: x holds B columns of in_features(), q B columns of
  // num_actions().
  void forward(std::span<const T> x, std::span<T> q) const {
    advantage_.forward(x, q);
    const std::size_t in = in_features();
    const std::size_t A = num_actions();
    const T* wv = value_.weight().value.raw();
    const T bv = value_.bias().value[0];
    for (std::size_t b = 0; b < x.size() / in; ++b) {
      const T* xb = x.data() + b * in;
      T v = bv;
      for (std::size_t k = 0; k < in; ++k) v += wv[k] * xb[k];
      const std::span<T> col = q.subspan(b * A, A);
      dueling_combine<T>(v, col, col);
    }
  }

  // dV = sum(dq), dA = dq.
  void backward(std::span<const T> x, std::span<const T> dq, std::span<T> dx) {
    const std::size_t A = num_actions();
    const std::size_t batch = dq.size() / A;
    dv_.assign(batch, T{0});
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t a = 0; a < A; ++a) dv_[b] += dq[b * A + a];
    }
    value_.backward(x, dv_, dx);
    advantage_.backward(x, dq, dx);
  }

  Linear<T>& value() { return value_; }
  Linear<T>& advantage() { return advantage_; }

  void collect(ParamList<T>& out) {
    value_.collect(out);
    advantage_.collect(out);
  }

 private:
  Linear<T> value_;
  Linear<T> advantage_;
  std::vector<T> dv_;
};

}  // namespace vdn::nn
