#ifndef PRISM_EMBEDDING_OPTIM_HPP
#define PRISM_EMBEDDING_OPTIM_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/embedding/layers.hpp"

namespace prism {

enum class OptimizerKind { sgd, adam };

inline std::string_view name(OptimizerKind k) noexcept { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw ParseError("unknown optimizer '" + std::string(s) + "'");
}

/// Plain gradient descent or Adam over a model's for_each_param tensors.
/// A positive weight_decay is applied decoupled from the gradient (AdamW style).
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr, double weight_decay = 0.0)
      : kind_(kind), lr_(lr), base_lr_(lr), weight_decay_(weight_decay) {
    detail::require(lr > 0.0 && std::isfinite(lr), "Optimizer: learning rate must be positive");
    detail::require(weight_decay >= 0.0, "Optimizer: weight decay must be non-negative");
  }

  OptimizerKind kind() const noexcept { return kind_; }
  double learning_rate() const noexcept { return lr_; }
  void set_learning_rate(double lr) noexcept { lr_ = lr; }

  /// Cosine decay from the base rate to zero over `total` steps.
  void cosine_schedule(std::size_t step, std::size_t total) noexcept {
    if (total == 0) return;
    const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
    lr_ = 0.5 * base_lr_ * (1.0 + std::cos(std::numbers::pi * t));
  }

  template <class M>
  void step(M& model, M& grad) {
    std::vector<Vec*> ps, gs;
    model.for_each_param("", [&](const std::string&, Vec& v, const Shape&) { ps.push_back(&v); });
    grad.for_each_param("", [&](const std::string&, Vec& v, const Shape&) { gs.push_back(&v); });
    detail::require(ps.size() == gs.size(), "Optimizer: model/gradient layout mismatch");
    if (kind_ == OptimizerKind::adam && m_.empty()) {
      for (auto* p : ps) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
      }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < ps.size(); ++k) {
      auto& p = *ps[k];
      const auto& g = *gs[k];
      detail::require(p.size() == g.size(), "Optimizer: tensor size mismatch");
      if (weight_decay_ > 0.0)
        for (double& v : p) v -= lr_ * weight_decay_ * v;
      if (kind_ == OptimizerKind::sgd) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr_ * g[i];
        continue;
      }
      for (std::size_t i = 0; i < p.size(); ++i) {
        m_[k][i] = kBeta1 * m_[k][i] + (1.0 - kBeta1) * g[i];
        v_[k][i] = kBeta2 * v_[k][i] + (1.0 - kBeta2) * g[i] * g[i];
        p[i] -= lr_ * (m_[k][i] / c1) / (std::sqrt(v_[k][i] / c2) + kEps);
      }
    }
  }

 private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  OptimizerKind kind_;
  double lr_, base_lr_, weight_decay_;
  long t_ = 0;
  std::vector<Vec> m_, v_;
};

}  // namespace prism

#endif
