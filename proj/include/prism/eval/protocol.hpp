#ifndef PRISM_EVAL_PROTOCOL_HPP
#define PRISM_EVAL_PROTOCOL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "prism/dataset/builder.hpp"
#include "prism/embedding/train.hpp"
#include "prism/eval/metrics.hpp"
#include "prism/prompts/request.hpp"

namespace prism {

/// Requested labels gone, every other detected label kept.
inline bool is_faithful(const LabelSet& before, const LabelSet& after, const LabelSet& targets) {
  return (targets & after).empty() && (before - targets).subset_of(after);
}

inline bool prompt_faithfulness(const Detector& detector, const Image& input, const Image& output,
                                const RestorationRequest& request) {
  return is_faithful(detector.detect(input), detector.detect(output), request.targets);
}

/// Positive cosine minus the hardest (largest) negative cosine.
inline double positive_gap(std::span<const double> anchor, std::span<const double> positive,
                           const std::vector<Vec>& negatives) {
  detail::require(!negatives.empty(), "positive_gap: no negatives");
  double hardest = -1.0;
  for (const auto& n : negatives) hardest = std::max(hardest, cosine(anchor, n));
  return cosine(anchor, positive) - hardest;
}

/// A compound-degraded image with the same clean image degraded by each of
/// its primitives, and by one primitive of every category it lacks.
struct GeometryCase {
  Vec compound;
  std::vector<Vec> primitives;
  std::vector<Vec> unrelated;
};

inline std::vector<Category> categories_of(const std::vector<DistortionKind>& kinds, const Grouping& g = {}) {
  std::vector<Category> cats;
  for (auto k : kinds)
    if (std::find(cats.begin(), cats.end(), g.category(k)) == cats.end()) cats.push_back(g.category(k));
  return cats;
}

/// Cases from held-out items carrying at least two distortions.
inline std::vector<GeometryCase> geometry_cases(const DatasetBuilder& builder, std::size_t max_cases,
                                                std::uint64_t seed = 42) {
  const auto& cfg = builder.config();
  const auto pool = cfg.kind_pool();
  const Grouping g;
  const auto cats = categories_of(pool, g);
  std::vector<GeometryCase> out;
  for (std::uint64_t id = 0; id < cfg.n_images && out.size() < max_cases; ++id) {
    if (assign_split(id, cfg.split_fractions) == Split::train) continue;
    const auto it = builder.make_item(id);
    if (it.triplet.applied_specs.size() < 2) continue;
    GeometryCase c;
    c.compound = extract_features(it.distorted);
    for (const auto& s : it.triplet.applied_specs) c.primitives.push_back(extract_features(apply(s, it.clean, &it.depth)));
    SeededRng rng(child_seed(seed, id));
    for (Category cat : cats) {
      if (it.triplet.applied_labels.contains(cat)) continue;
      std::vector<DistortionKind> ks;
      for (auto k : pool)
        if (g.category(k) == cat) ks.push_back(k);
      const auto s = sample_spec(ks[rng.index(ks.size())], rng, true);
      c.unrelated.push_back(extract_features(apply(s, it.clean, &it.depth)));
    }
    if (!c.unrelated.empty()) out.push_back(std::move(c));
  }
  return out;
}

/// Fraction of cases whose mean cosine to their primitives exceeds the mean
/// cosine to the unrelated primitives.
inline double geometry_pass_rate(const Encoder& enc, const std::vector<GeometryCase>& cases) {
  detail::require(!cases.empty(), "geometry_pass_rate: no cases");
  std::size_t pass = 0;
  for (const auto& c : cases) {
    const auto e = enc.encode_features(c.compound);
    double near = 0.0, far = 0.0;
    for (const auto& v : c.primitives) near += cosine(e, enc.encode_features(v));
    for (const auto& v : c.unrelated) far += cosine(e, enc.encode_features(v));
    near /= static_cast<double>(c.primitives.size());
    far /= static_cast<double>(c.unrelated.size());
    pass += near > far;
  }
  return static_cast<double>(pass) / static_cast<double>(cases.size());
}

/// Micro-F1 of the thresholded classifier over degraded items.
inline F1Counts evaluate_classifier(const ClassifierHead& head, const std::vector<LabeledEmbedding>& items,
                                    double threshold = kDefaultThreshold) {
  F1Counts c;
  for (const auto& it : items)
    if (!it.labels.empty()) c.add(predict_labels(head, it.e, threshold), it.labels);
  return c;
}

inline constexpr std::array<double, 5> kTauSweep = {0.03, 0.07, 0.10, 0.20, 0.50};

struct TauPoint {
  double tau = 0.0;
  std::vector<double> pos_cos;  // one per seed
  std::vector<double> gap;
};

struct LatentDiagnostics {
  std::vector<TauPoint> points;

  static std::pair<double, double> mean_sd(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0};
  }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& p : points) {
      const auto [pm, ps] = mean_sd(p.pos_cos);
      const auto [gm, gs] = mean_sd(p.gap);
      rows.push_back({{"tau", p.tau}, {"pos_cos", p.pos_cos}, {"gap", p.gap}, {"pos_cos_mean", pm},
                      {"pos_cos_sd", ps}, {"gap_mean", gm}, {"gap_sd", gs}});
    }
    return {{"points", rows}};
  }

  std::string to_csv() const {
    std::string s = "tau,seed_index,pos_cos,gap\n";
    for (const auto& p : points)
      for (std::size_t i = 0; i < p.pos_cos.size(); ++i)
        s += std::to_string(p.tau) + "," + std::to_string(i) + "," + std::to_string(p.pos_cos[i]) + "," +
             std::to_string(p.gap[i]) + "\n";
    return s;
  }
};

/// Retrains one encoder per (tau, seed) and measures it on `eval`.
inline LatentDiagnostics latent_diagnostics(const TrainingData& train, const TrainingData& eval, TrainConfig base,
                                            const std::vector<double>& taus = {kTauSweep.begin(), kTauSweep.end()},
                                            const std::vector<std::uint64_t>& seeds = {42, 43, 44}) {
  detail::require(!taus.empty() && !seeds.empty(), "latent_diagnostics: empty tau or seed list");
  LatentDiagnostics d;
  for (double tau : taus) {
    TauPoint p;
    p.tau = tau;
    for (auto seed : seeds) {
      base.tau = tau;
      base.seed = seed;
      const auto r = train_encoder(train, base);
      const auto st = latent_stats(r.encoder, eval, base.batch_clean);
      p.pos_cos.push_back(st.pos_cos);
      p.gap.push_back(st.gap);
    }
    d.points.push_back(std::move(p));
  }
  return d;
}

}  // namespace prism

#endif
