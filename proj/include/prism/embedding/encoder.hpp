#ifndef PRISM_EMBEDDING_ENCODER_HPP
#define PRISM_EMBEDDING_ENCODER_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/image.hpp"
#include "prism/core/rng.hpp"
#include "prism/embedding/features.hpp"
#include "prism/embedding/layers.hpp"

namespace prism {

using Embedding = Vec;

/// Per-feature affine whitening fitted on training features; not trained by gradient.
struct Standardizer {
  Vec mean, scale;

  Standardizer() = default;
  explicit Standardizer(std::size_t dim) : mean(dim, 0.0), scale(dim, 1.0) {}

  static Standardizer fit(const std::vector<Vec>& rows) {
    detail::require(!rows.empty(), "Standardizer::fit: no rows");
    const std::size_t d = rows.front().size();
    Standardizer s(d);
    for (const auto& r : rows) {
      detail::require(r.size() == d, "Standardizer::fit: ragged rows");
      for (std::size_t i = 0; i < d; ++i) s.mean[i] += r[i];
    }
    for (double& m : s.mean) m /= static_cast<double>(rows.size());
    Vec var(d, 0.0);
    for (const auto& r : rows)
      for (std::size_t i = 0; i < d; ++i) var[i] += (r[i] - s.mean[i]) * (r[i] - s.mean[i]);
    for (std::size_t i = 0; i < d; ++i) {
      const double sd = std::sqrt(var[i] / static_cast<double>(rows.size()));
      s.scale[i] = sd > 1e-9 ? 1.0 / sd : 1.0;
    }
    return s;
  }

  Vec operator()(std::span<const double> x) const {
    detail::require(x.size() == mean.size(), "Standardizer: dimension mismatch");
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mean[i]) * scale[i];
    return y;
  }
};

struct EncoderConfig {
  int image_height = 64;
  int image_width = 64;
  std::size_t hidden = 128;
  std::size_t dim = 64;
};

/// features -> standardize -> Dense tanh -> Dense tanh -> Dense -> unit sphere.
class Encoder {
 public:
  struct Cache {
    Vec x, h1, h2, u, e;
    double norm = 0.0;
  };

  Encoder() = default;
  explicit Encoder(const EncoderConfig& cfg)
      : cfg_(cfg), std_(kFeatureDim), l1_(kFeatureDim, cfg.hidden), l2_(cfg.hidden, cfg.hidden), l3_(cfg.hidden, cfg.dim) {
    detail::require(cfg.dim >= 2 && cfg.hidden >= 1, "Encoder: bad layer sizes");
    detail::require(cfg.image_height >= 8 && cfg.image_width >= 8, "Encoder: image must be at least 8x8");
  }
  Encoder(const EncoderConfig& cfg, std::uint64_t seed) : Encoder(cfg) {
    SeededRng rng(seed);
    l1_.init(rng);
    l2_.init(rng);
    l3_.init(rng);
  }

  const EncoderConfig& config() const noexcept { return cfg_; }
  std::size_t dim() const noexcept { return cfg_.dim; }
  const Standardizer& standardizer() const noexcept { return std_; }
  void set_standardizer(Standardizer s) {
    detail::require(s.mean.size() == kFeatureDim && s.scale.size() == kFeatureDim, "Encoder: standardizer size");
    std_ = std::move(s);
  }

  /// Same shapes, all trainable parameters zero; used as a gradient accumulator.
  Encoder zeros_like() const {
    Encoder g(cfg_);
    g.std_ = std_;
    return g;
  }

  Cache forward_features(std::span<const double> raw) const {
    Cache c;
    c.x = std_(raw);
    c.h1 = l1_(c.x);
    tanh_inplace(c.h1);
    c.h2 = l2_(c.h1);
    tanh_inplace(c.h2);
    c.u = l3_(c.h2);
    double n2 = 0.0;
    for (double v : c.u) n2 += v * v;
    c.norm = std::sqrt(n2);
    if (!(c.norm > 0.0) || !std::isfinite(c.norm)) throw NumericError("Encoder: degenerate pre-normalization output");
    c.e.resize(c.u.size());
    for (std::size_t i = 0; i < c.u.size(); ++i) c.e[i] = c.u[i] / c.norm;
    return c;
  }

  Vec features(const Image& img) const {
    if (img.height() != cfg_.image_height || img.width() != cfg_.image_width)
      throw InvalidArgument("encode: image is " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                            ", encoder expects " + std::to_string(cfg_.image_height) + "x" +
                            std::to_string(cfg_.image_width));
    return extract_features(img);
  }

  Embedding encode_features(std::span<const double> raw) const { return forward_features(raw).e; }
  Embedding encode(const Image& img) const { return encode_features(features(img)); }

  /// Accumulates parameter gradients given dL/de.
  void backward(const Cache& c, std::span<const double> de, Encoder& g) const {
    const std::size_t d = c.e.size();
    double dot = 0.0;
    for (std::size_t i = 0; i < d; ++i) dot += de[i] * c.e[i];
    Vec du(d);
    for (std::size_t i = 0; i < d; ++i) du[i] = (de[i] - dot * c.e[i]) / c.norm;
    Vec dh2(cfg_.hidden), dh1(cfg_.hidden);
    l3_.backward(c.h2, du, g.l3_, dh2);
    tanh_backward(c.h2, dh2);
    l2_.backward(c.h1, dh2, g.l2_, dh1);
    tanh_backward(c.h1, dh1);
    l1_.backward(c.x, dh1, g.l1_, {});
  }

  template <class F>
  void for_each_param(const std::string& prefix, F&& f) {
    l1_.for_each_param(prefix + ".l1", f);
    l2_.for_each_param(prefix + ".l2", f);
    l3_.for_each_param(prefix + ".l3", f);
  }

  /// Trainable parameters plus the fitted standardizer; the checkpoint view.
  template <class F>
  void for_each_tensor(const std::string& prefix, F&& f) {
    f(prefix + ".std.mean", std_.mean, Shape{std_.mean.size()});
    f(prefix + ".std.scale", std_.scale, Shape{std_.scale.size()});
    for_each_param(prefix, f);
  }

 private:
  EncoderConfig cfg_;
  Standardizer std_;
  Dense l1_, l2_, l3_;
};

}  // namespace prism

#endif
