#pragma once

// Dense layers with explicit reverse-mode gradients. Token sequences are
// matrices with one token per row.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "anwm/errors.hpp"
#include "anwm/rng.hpp"

namespace anwm::nn {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Gradients = std::vector<Mat<Scalar>>;

/// Named parameter tensors. Indices are stable; layers refer to them by index.
template <typename Scalar>
class ParameterSet {
 public:
  std::size_t add(std::string name, Mat<Scalar> value) {
    names_.push_back(std::move(name));
    values_.push_back(std::move(value));
    return values_.size() - 1;
  }

  std::size_t size() const { return values_.size(); }
  Mat<Scalar>& operator[](std::size_t i) { return values_[i]; }
  const Mat<Scalar>& operator[](std::size_t i) const { return values_[i]; }
  const std::string& name(std::size_t i) const { return names_[i]; }

  std::optional<std::size_t> find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return i;
    return std::nullopt;
  }

  Gradients<Scalar> zeros() const {
    Gradients<Scalar> g;
    g.reserve(values_.size());
    for (const auto& v : values_) g.push_back(Mat<Scalar>::Zero(v.rows(), v.cols()));
    return g;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
    return n;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Mat<Scalar>> values_;
};

inline double xavier_bound(long fan_in, long fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename Scalar>
Mat<Scalar> uniform_init(long rows, long cols, double bound, Rng& rng) {
  Mat<Scalar> m(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
  return m;
}

template <typename Scalar>
Mat<Scalar> normal_init(long rows, long cols, double stddev, Rng& rng) {
  Mat<Scalar> m(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(stddev * rng.normal());
  return m;
}

/// y = x W + b, W is (in x out), b is (1 x out).
template <typename Scalar>
struct Linear {
  std::size_t weight = 0, bias = 0;

  static Linear create(ParameterSet<Scalar>& p, const std::string& name, long in, long out, Rng* rng) {
    Linear l;
    l.weight = p.add(name + ".weight", rng ? uniform_init<Scalar>(in, out, xavier_bound(in, out), *rng)
                                           : Mat<Scalar>::Zero(in, out));
    l.bias = p.add(name + ".bias", Mat<Scalar>::Zero(1, out));
    return l;
  }

  Mat<Scalar> forward(const ParameterSet<Scalar>& p, const Mat<Scalar>& x) const {
    Mat<Scalar> y = x * p[weight];
    y.rowwise() += p[bias].row(0);
    return y;
  }

  /// Accumulates parameter gradients and returns dL/dx.
  Mat<Scalar> backward(const ParameterSet<Scalar>& p, const Mat<Scalar>& x, const Mat<Scalar>& dy,
                       Gradients<Scalar>& g) const {
    g[weight].noalias() += x.transpose() * dy;
    g[bias] += dy.colwise().sum();
    return dy * p[weight].transpose();
  }

  /// Parameter gradients only.
  void backward_params(const Mat<Scalar>& x, const Mat<Scalar>& dy, Gradients<Scalar>& g) const {
    g[weight].noalias() += x.transpose() * dy;
    g[bias] += dy.colwise().sum();
  }
};

// ---------------------------------------------------------------------------
// Layer norm over each row, no learned affine (modulation supplies it).

template <typename Scalar>
struct LayerNormCache {
  Mat<Scalar> xhat;
  Vec<Scalar> inv_std;
};

template <typename Scalar>
Mat<Scalar> layer_norm(const Mat<Scalar>& x, LayerNormCache<Scalar>& cache, Scalar eps = Scalar(1e-6)) {
  const auto d = static_cast<Scalar>(x.cols());
  const Vec<Scalar> mean = x.rowwise().sum() / d;
  Mat<Scalar> centered = x.colwise() - mean;
  const Vec<Scalar> var = centered.array().square().rowwise().sum() / d;
  cache.inv_std = (var.array() + eps).rsqrt();
  cache.xhat = centered.array().colwise() * cache.inv_std.array();
  return cache.xhat;
}

template <typename Scalar>
Mat<Scalar> layer_norm_backward(const LayerNormCache<Scalar>& cache, const Mat<Scalar>& dxhat) {
  const auto d = static_cast<Scalar>(dxhat.cols());
  const Vec<Scalar> mean_g = dxhat.rowwise().sum() / d;
  const Vec<Scalar> mean_gx = (dxhat.array() * cache.xhat.array()).rowwise().sum() / d;
  Mat<Scalar> dx = dxhat;
  dx.colwise() -= mean_g;
  dx.array() -= cache.xhat.array().colwise() * mean_gx.array();
  dx.array().colwise() *= cache.inv_std.array();
  return dx;
}

/// (1 + scale) * x + shift, broadcast over rows.
template <typename Scalar>
Mat<Scalar> modulate(const Mat<Scalar>& x, const RowVec<Scalar>& scale, const RowVec<Scalar>& shift) {
  Mat<Scalar> y = x.array().rowwise() * (scale.array() + Scalar(1));
  y.rowwise() += shift;
  return y;
}

/// Returns dL/dx and accumulates into dscale / dshift.
template <typename Scalar>
Mat<Scalar> modulate_backward(const Mat<Scalar>& x, const RowVec<Scalar>& scale, const Mat<Scalar>& dy,
                              Eigen::Ref<RowVec<Scalar>, 0, Eigen::InnerStride<>> dscale,
                              Eigen::Ref<RowVec<Scalar>, 0, Eigen::InnerStride<>> dshift) {
  dscale += (dy.array() * x.array()).colwise().sum().matrix();
  dshift += dy.colwise().sum();
  return dy.array().rowwise() * (scale.array() + Scalar(1));
}

// ---------------------------------------------------------------------------
// Activations

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  return Scalar(1) / (Scalar(1) + std::exp(-x));
}

template <typename Scalar>
Mat<Scalar> silu(const Mat<Scalar>& x) {
  return x.unaryExpr([](Scalar v) { return v * sigmoid(v); });
}

template <typename Scalar>
Mat<Scalar> silu_backward(const Mat<Scalar>& x, const Mat<Scalar>& dy) {
  return dy.binaryExpr(x, [](Scalar g, Scalar v) {
    const Scalar s = sigmoid(v);
    return g * s * (Scalar(1) + v * (Scalar(1) - s));
  });
}

// tanh approximation
template <typename Scalar>
Mat<Scalar> gelu(const Mat<Scalar>& x) {
  constexpr Scalar c = Scalar(0.7978845608028654);
  return x.unaryExpr([](Scalar v) {
    return Scalar(0.5) * v * (Scalar(1) + std::tanh(c * (v + Scalar(0.044715) * v * v * v)));
  });
}

template <typename Scalar>
Mat<Scalar> gelu_backward(const Mat<Scalar>& x, const Mat<Scalar>& dy) {
  constexpr Scalar c = Scalar(0.7978845608028654);
  return dy.binaryExpr(x, [](Scalar g, Scalar v) {
    const Scalar t = std::tanh(c * (v + Scalar(0.044715) * v * v * v));
    const Scalar dt = c * (Scalar(1) + Scalar(3 * 0.044715) * v * v) * (Scalar(1) - t * t);
    return g * (Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * v * dt);
  });
}

// ---------------------------------------------------------------------------
// Multi-head attention: queries from `xq`, keys/values from `xkv`.

template <typename Scalar>
struct AttentionCache {
  Mat<Scalar> xq, xkv, q, k, v, heads_out;
  std::vector<Mat<Scalar>> probs;  // one (nq x nkv) matrix per head
};

template <typename Scalar>
struct Attention {
  Linear<Scalar> wq, wk, wv, wo;
  int heads = 1;

  static Attention create(ParameterSet<Scalar>& p, const std::string& name, long dim, int heads, Rng& rng) {
    if (heads <= 0 || dim % heads != 0) throw InvalidArgument("attention: dim must be divisible by heads");
    Attention a;
    a.heads = heads;
    a.wq = Linear<Scalar>::create(p, name + ".q", dim, dim, &rng);
    a.wk = Linear<Scalar>::create(p, name + ".k", dim, dim, &rng);
    a.wv = Linear<Scalar>::create(p, name + ".v", dim, dim, &rng);
    a.wo = Linear<Scalar>::create(p, name + ".out", dim, dim, &rng);
    return a;
  }

  Mat<Scalar> forward(const ParameterSet<Scalar>& p, const Mat<Scalar>& xq, const Mat<Scalar>& xkv,
                      AttentionCache<Scalar>& c) const {
    if (xq.cols() != xkv.cols()) throw InvalidArgument("attention: query and memory widths differ");
    c.xq = xq;
    c.xkv = xkv;
    c.q = wq.forward(p, xq);
    c.k = wk.forward(p, xkv);
    c.v = wv.forward(p, xkv);
    const long dim = c.q.cols(), dh = dim / heads;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    c.heads_out.resize(xq.rows(), dim);
    c.probs.resize(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
      Mat<Scalar> s = (c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose()) * scale;
      const Vec<Scalar> mx = s.rowwise().maxCoeff();
      s = (s.colwise() - mx).array().exp();
      const Vec<Scalar> sum = s.rowwise().sum();
      s.array().colwise() /= sum.array();
      c.heads_out.middleCols(h * dh, dh).noalias() = s * c.v.middleCols(h * dh, dh);
      c.probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    return wo.forward(p, c.heads_out);
  }

  /// Returns (dL/dxq, dL/dxkv).
  std::pair<Mat<Scalar>, Mat<Scalar>> backward(const ParameterSet<Scalar>& p, const AttentionCache<Scalar>& c,
                                               const Mat<Scalar>& dout, Gradients<Scalar>& g) const {
    const Mat<Scalar> dheads = wo.backward(p, c.heads_out, dout, g);
    const long dim = c.q.cols(), dh = dim / heads;
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    Mat<Scalar> dq(c.q.rows(), dim), dk(c.k.rows(), dim), dv(c.v.rows(), dim);
    for (int h = 0; h < heads; ++h) {
      const Mat<Scalar>& pr = c.probs[static_cast<std::size_t>(h)];
      const auto dout_h = dheads.middleCols(h * dh, dh);
      dv.middleCols(h * dh, dh).noalias() = pr.transpose() * dout_h;
      Mat<Scalar> dp = dout_h * c.v.middleCols(h * dh, dh).transpose();
      const Vec<Scalar> row_dot = (dp.array() * pr.array()).rowwise().sum();
      Mat<Scalar> ds = (pr.array() * (dp.colwise() - row_dot).array()) * scale;
      dq.middleCols(h * dh, dh).noalias() = ds * c.k.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh).noalias() = ds.transpose() * c.q.middleCols(h * dh, dh);
    }
    Mat<Scalar> dxq = wq.backward(p, c.xq, dq, g);
    Mat<Scalar> dxkv = wk.backward(p, c.xkv, dk, g);
    dxkv += wv.backward(p, c.xkv, dv, g);
    return {std::move(dxq), std::move(dxkv)};
  }
};

// ---------------------------------------------------------------------------
// Two-layer GELU feed-forward.

template <typename Scalar>
struct MlpCache {
  Mat<Scalar> x, hidden, act;
};

template <typename Scalar>
struct Mlp {
  Linear<Scalar> fc1, fc2;

  static Mlp create(ParameterSet<Scalar>& p, const std::string& name, long dim, long hidden, Rng& rng) {
    return {Linear<Scalar>::create(p, name + ".fc1", dim, hidden, &rng),
            Linear<Scalar>::create(p, name + ".fc2", hidden, dim, &rng)};
  }

  Mat<Scalar> forward(const ParameterSet<Scalar>& p, const Mat<Scalar>& x, MlpCache<Scalar>& c) const {
    c.x = x;
    c.hidden = fc1.forward(p, x);
    c.act = gelu(c.hidden);
    return fc2.forward(p, c.act);
  }

  Mat<Scalar> backward(const ParameterSet<Scalar>& p, const MlpCache<Scalar>& c, const Mat<Scalar>& dy,
                       Gradients<Scalar>& g) const {
    const Mat<Scalar> dact = fc2.backward(p, c.act, dy, g);
    return fc1.backward(p, c.x, gelu_backward(c.hidden, dact), g);
  }
};

}  // namespace anwm::nn
