#ifndef PRISM_EMBEDDING_LAYERS_HPP
#define PRISM_EMBEDDING_LAYERS_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/rng.hpp"

namespace prism {

using Vec = std::vector<double>;
using Shape = std::vector<std::uint64_t>;

/// y = W x + b with W stored row-major (out x in).
struct Dense {
  std::size_t in = 0, out = 0;
  Vec W, b;

  Dense() = default;
  Dense(std::size_t in_dim, std::size_t out_dim) : in(in_dim), out(out_dim), W(in_dim * out_dim, 0.0), b(out_dim, 0.0) {}

  /// Glorot-uniform weights, zero bias.
  void init(SeededRng& rng) {
    const double r = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : W) w = rng.uniform(-r, r);
    std::fill(b.begin(), b.end(), 0.0);
  }

  void forward(std::span<const double> x, std::span<double> y) const {
    for (std::size_t o = 0; o < out; ++o) {
      const double* row = &W[o * in];
      double acc = b[o];
      for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
  }

  Vec operator()(std::span<const double> x) const {
    Vec y(out);
    forward(x, y);
    return y;
  }

  /// Accumulates parameter gradients into `g`; writes dL/dx when `dx` is non-empty.
  void backward(std::span<const double> x, std::span<const double> dy, Dense& g, std::span<double> dx) const {
    for (std::size_t o = 0; o < out; ++o) {
      const double d = dy[o];
      if (d == 0.0) continue;
      double* grow = &g.W[o * in];
      for (std::size_t i = 0; i < in; ++i) grow[i] += d * x[i];
      g.b[o] += d;
    }
    if (!dx.empty()) {
      std::fill(dx.begin(), dx.end(), 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = dy[o];
        if (d == 0.0) continue;
        const double* row = &W[o * in];
        for (std::size_t i = 0; i < in; ++i) dx[i] += row[i] * d;
      }
    }
  }

  template <class F>
  void for_each_param(const std::string& prefix, F&& f) {
    f(prefix + ".W", W, Shape{out, in});
    f(prefix + ".b", b, Shape{out});
  }
};

inline double sigmoid(double z) noexcept {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) noexcept { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline void tanh_inplace(std::span<double> v) {
  for (double& x : v) x = std::tanh(x);
}

/// dL/da given dL/dh and h = tanh(a).
inline void tanh_backward(std::span<const double> h, std::span<double> dh) {
  for (std::size_t i = 0; i < h.size(); ++i) dh[i] *= 1.0 - h[i] * h[i];
}

/// in -> hidden (tanh) -> K logits -> sigmoid. Used for the quality probe and the classifier.
class MultiLabelHead {
 public:
  struct Cache {
    Vec x, h, z, p;
  };

  MultiLabelHead() = default;
  MultiLabelHead(std::size_t in, std::size_t hidden, std::size_t k) : l1_(in, hidden), l2_(hidden, k) {}
  MultiLabelHead(std::size_t in, std::size_t hidden, std::size_t k, std::uint64_t seed) : MultiLabelHead(in, hidden, k) {
    SeededRng rng(seed);
    l1_.init(rng);
    l2_.init(rng);
  }

  std::size_t in_dim() const noexcept { return l1_.in; }
  std::size_t hidden_dim() const noexcept { return l1_.out; }
  std::size_t out_dim() const noexcept { return l2_.out; }

  MultiLabelHead zeros_like() const { return MultiLabelHead(in_dim(), hidden_dim(), out_dim()); }

  Cache forward(std::span<const double> x) const {
    detail::require(x.size() == in_dim(), "MultiLabelHead: input dimension mismatch");
    Cache c{Vec(x.begin(), x.end()), l1_(x), {}, {}};
    tanh_inplace(c.h);
    c.z = l2_(c.h);
    c.p.resize(c.z.size());
    for (std::size_t i = 0; i < c.z.size(); ++i) c.p[i] = sigmoid(c.z[i]);
    return c;
  }

  Vec predict(std::span<const double> x) const { return forward(x).p; }

  /// Backpropagates dL/dlogits; accumulates into `g` and writes dL/dx if `dx` is non-empty.
  void backward(const Cache& c, std::span<const double> dz, MultiLabelHead& g, std::span<double> dx) const {
    Vec dh(hidden_dim());
    l2_.backward(c.h, dz, g.l2_, dh);
    tanh_backward(c.h, dh);
    l1_.backward(c.x, dh, g.l1_, dx);
  }

  template <class F>
  void for_each_param(const std::string& prefix, F&& f) {
    l1_.for_each_param(prefix + ".l1", f);
    l2_.for_each_param(prefix + ".l2", f);
  }

  Dense& layer(int i) { return i == 0 ? l1_ : l2_; }

 private:
  Dense l1_, l2_;
};

}  // namespace prism

#endif
