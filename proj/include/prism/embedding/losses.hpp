#ifndef PRISM_EMBEDDING_LOSSES_HPP
#define PRISM_EMBEDDING_LOSSES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/distortions/labels.hpp"
#include "prism/embedding/layers.hpp"

namespace prism {

enum class WeightScheme { jaccard, cosine_labels, overlap, unweighted, none };

inline constexpr std::array<std::string_view, 5> kWeightSchemeNames = {"jaccard", "cosine_labels", "overlap",
                                                                      "unweighted", "none"};

inline std::string_view name(WeightScheme s) noexcept { return kWeightSchemeNames[static_cast<std::size_t>(s)]; }

inline WeightScheme parse_weight_scheme(std::string_view s) {
  for (std::size_t i = 0; i < kWeightSchemeNames.size(); ++i)
    if (kWeightSchemeNames[i] == s) return static_cast<WeightScheme>(i);
  throw ParseError("unknown weighting scheme '" + std::string(s) + "'");
}

inline std::vector<WeightScheme> all_weight_schemes() {
  return {WeightScheme::none, WeightScheme::unweighted, WeightScheme::cosine_labels, WeightScheme::overlap,
          WeightScheme::jaccard};
}

inline double jaccard_similarity(const LabelSet& a, const LabelSet& b) {
  const std::size_t u = (a | b).size();
  if (u == 0) throw InvalidArgument("jaccard: both label sets are empty");
  return static_cast<double>((a & b).size()) / static_cast<double>(u);
}

/// w_jk = exp(1 - |a & b| / |a | b|), in [1, e].
inline double jaccard_weight(const LabelSet& a, const LabelSet& b) { return std::exp(1.0 - jaccard_similarity(a, b)); }

inline double label_similarity(WeightScheme scheme, const LabelSet& a, const LabelSet& b) {
  const auto inter = static_cast<double>((a & b).size());
  switch (scheme) {
    case WeightScheme::jaccard:
      return jaccard_similarity(a, b);
    case WeightScheme::cosine_labels:
      if (a.empty() || b.empty()) throw InvalidArgument("cosine_labels: empty label set");
      return inter / std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
    case WeightScheme::overlap:
      if (a.empty() || b.empty()) throw InvalidArgument("overlap: empty label set");
      return inter / static_cast<double>(std::min(a.size(), b.size()));
    case WeightScheme::unweighted:
      return a == b ? 1.0 : 0.0;
    case WeightScheme::none:
      return 1.0;
  }
  return 1.0;
}

/// Sibling repulsion weight exp(1 - similarity); identically 1 for scheme none.
inline double pair_weight(WeightScheme scheme, const LabelSet& a, const LabelSet& b) {
  return scheme == WeightScheme::none ? 1.0 : std::exp(1.0 - label_similarity(scheme, a, b));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size(), "cosine: dimension mismatch");
  const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericError("cosine: zero vector");
  return dot(a, b) / (na * nb);
}

namespace detail {
/// Adds coef * d cos(a,b)/da to ga and coef * d cos(a,b)/db to gb.
inline void add_cosine_grad(std::span<const double> a, std::span<const double> b, double coef, std::span<double> ga,
                            std::span<double> gb) {
  const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
  const double c = dot(a, b) / (na * nb);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ga[i] += coef * (b[i] / (na * nb) - c * a[i] / (na * na));
    gb[i] += coef * (a[i] / (na * nb) - c * b[i] / (nb * nb));
  }
}

inline double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}
}  // namespace detail

struct ContrastiveResult {
  double loss = 0.0;
  Vec d_clean;
  std::vector<Vec> d_variants;
  std::vector<Vec> d_others;
};

/// Mean over variants j of
///   -log exp(s_jc/t) / (sum_{k!=j} w_jk exp(s_jk/t) + sum_l exp(s_jl/t) [+ exp(s_jc/t) for scheme none]).
inline ContrastiveResult contrastive_loss(std::span<const double> e_clean, const std::vector<Vec>& variants,
                                          const std::vector<LabelSet>& labels, const std::vector<Vec>& others,
                                          double tau, WeightScheme scheme) {
  if (variants.empty()) throw InvalidArgument("contrastive_loss: no variants");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("contrastive_loss: tau must be positive");
  detail::require(labels.size() == variants.size(), "contrastive_loss: one label set per variant");
  const std::size_t m = variants.size(), d = e_clean.size();
  const bool with_positive = scheme == WeightScheme::none;
  if (m == 1 && others.empty() && !with_positive) throw InvalidArgument("contrastive_loss: empty denominator");

  ContrastiveResult r;
  r.d_clean.assign(d, 0.0);
  r.d_variants.assign(m, Vec(d, 0.0));
  r.d_others.assign(others.size(), Vec(d, 0.0));
  const double inv_m = 1.0 / static_cast<double>(m);

  std::vector<double> terms;
  for (std::size_t j = 0; j < m; ++j) {
    const auto& ej = variants[j];
    detail::require(ej.size() == d, "contrastive_loss: dimension mismatch");
    const double pos = cosine(ej, e_clean) / tau;
    terms.clear();
    for (std::size_t k = 0; k < m; ++k)
      if (k != j) terms.push_back(std::log(pair_weight(scheme, labels[j], labels[k])) + cosine(ej, variants[k]) / tau);
    for (const auto& o : others) terms.push_back(cosine(ej, o) / tau);
    if (with_positive) terms.push_back(pos);
    const double lse = detail::log_sum_exp(terms);
    r.loss += inv_m * (lse - pos);

    // dL/ds = (softmax share - [positive]) / tau, scaled by 1/m.
    double coef_pos = -inv_m / tau;
    std::size_t t = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k == j) continue;
      detail::add_cosine_grad(ej, variants[k], inv_m * std::exp(terms[t++] - lse) / tau, r.d_variants[j],
                              r.d_variants[k]);
    }
    for (std::size_t l = 0; l < others.size(); ++l)
      detail::add_cosine_grad(ej, others[l], inv_m * std::exp(terms[t++] - lse) / tau, r.d_variants[j], r.d_others[l]);
    if (with_positive) coef_pos += inv_m * std::exp(terms[t] - lse) / tau;
    detail::add_cosine_grad(ej, e_clean, coef_pos, r.d_variants[j], r.d_clean);
  }
  if (!std::isfinite(r.loss)) throw NumericError("contrastive_loss: non-finite loss");
  return r;
}

struct QualityResult {
  double loss = 0.0;
  Vec d_embedding;
};

/// sum_c weight[c] * p(c | e); gradients accumulate into `probe_grad` when given.
inline QualityResult weighted_quality_loss(std::span<const double> e_clean, const MultiLabelHead& probe,
                                           const std::vector<double>& weight, MultiLabelHead* probe_grad = nullptr) {
  detail::require(probe.out_dim() == kNumCategories, "quality_loss: probe must output one value per category");
  const auto cache = probe.forward(e_clean);
  QualityResult r;
  Vec dz(kNumCategories, 0.0);
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    r.loss += weight[c] * cache.p[c];
    dz[c] = weight[c] * cache.p[c] * (1.0 - cache.p[c]);
  }
  r.d_embedding.assign(e_clean.size(), 0.0);
  MultiLabelHead scratch;
  MultiLabelHead& g = probe_grad ? *probe_grad : (scratch = probe.zeros_like());
  probe.backward(cache, dz, g, r.d_embedding);
  return r;
}

/// L_qual = sum over c in d of p(c | e_clean).
inline QualityResult quality_loss(std::span<const double> e_clean, const MultiLabelHead& probe, const LabelSet& d,
                                  MultiLabelHead* probe_grad = nullptr) {
  return weighted_quality_loss(e_clean, probe, d.multi_hot(), probe_grad);
}

/// Summed over K outputs: softplus(z) - y z.
inline double bce_with_logits(std::span<const double> z, std::span<const double> y, std::span<double> dz = {}) {
  detail::require(z.size() == y.size(), "bce: size mismatch");
  double l = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    l += softplus(z[i]) - y[i] * z[i];
    if (!dz.empty()) dz[i] = sigmoid(z[i]) - y[i];
  }
  return l;
}

/// Summed over K outputs: -(y log p + (1-y) log(1-p)).
inline double bce(std::span<const double> p, std::span<const double> y) {
  detail::require(p.size() == y.size(), "bce: size mismatch");
  double l = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    detail::require(p[i] > 0.0 && p[i] < 1.0, "bce: probabilities must lie in (0,1)");
    l -= y[i] * std::log(p[i]) + (1.0 - y[i]) * std::log1p(-p[i]);
  }
  return l;
}

/// One clean image with its degraded variants, already embedded.
struct GroupEmbeddings {
  Vec clean;
  std::vector<Vec> variants;
  std::vector<LabelSet> labels;
};

struct BatchLoss {
  double total = 0.0;
  double ctr = 0.0;
  double qual = 0.0;
  std::vector<Vec> d_clean;
  std::vector<std::vector<Vec>> d_variants;
};

/// Mean over groups of (1/m) sum_j (L_ctr^j + L_qual^j). The others-pool of a
/// group is every variant of the other groups in the batch.
inline BatchLoss batch_loss(const std::vector<GroupEmbeddings>& batch, const MultiLabelHead* probe, double tau,
                            WeightScheme scheme, MultiLabelHead* probe_grad = nullptr) {
  if (batch.empty()) throw InvalidArgument("batch_loss: empty batch");
  BatchLoss r;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& g : batch) {
    r.d_clean.emplace_back(g.clean.size(), 0.0);
    r.d_variants.emplace_back(g.variants.size(), Vec(g.clean.size(), 0.0));
  }
  for (std::size_t gi = 0; gi < batch.size(); ++gi) {
    const auto& g = batch[gi];
    std::vector<Vec> others;
    std::vector<std::pair<std::size_t, std::size_t>> where;
    for (std::size_t h = 0; h < batch.size(); ++h)
      if (h != gi)
        for (std::size_t j = 0; j < batch[h].variants.size(); ++j) {
          others.push_back(batch[h].variants[j]);
          where.emplace_back(h, j);
        }
    const auto c = contrastive_loss(g.clean, g.variants, g.labels, others, tau, scheme);
    r.ctr += inv_b * c.loss;
    for (std::size_t i = 0; i < g.clean.size(); ++i) r.d_clean[gi][i] += inv_b * c.d_clean[i];
    for (std::size_t j = 0; j < g.variants.size(); ++j)
      for (std::size_t i = 0; i < g.clean.size(); ++i) r.d_variants[gi][j][i] += inv_b * c.d_variants[j][i];
    for (std::size_t l = 0; l < others.size(); ++l)
      for (std::size_t i = 0; i < g.clean.size(); ++i)
        r.d_variants[where[l].first][where[l].second][i] += inv_b * c.d_others[l][i];

    if (probe) {
      std::vector<double> w(kNumCategories, 0.0);
      const double inv_m = 1.0 / static_cast<double>(g.variants.size());
      for (const auto& d : g.labels)
        for (Category cat : d.members()) w[static_cast<std::size_t>(cat)] += inv_m * inv_b;
      const auto q = weighted_quality_loss(g.clean, *probe, w, probe_grad);
      r.qual += q.loss;
      for (std::size_t i = 0; i < g.clean.size(); ++i) r.d_clean[gi][i] += q.d_embedding[i];
    }
  }
  r.total = r.ctr + r.qual;
  return r;
}

}  // namespace prism

#endif
