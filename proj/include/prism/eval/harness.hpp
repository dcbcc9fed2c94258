#ifndef PRISM_EVAL_HARNESS_HPP
#define PRISM_EVAL_HARNESS_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prism/dataset/builder.hpp"
#include "prism/embedding/train.hpp"
#include "prism/eval/controllability.hpp"
#include "prism/eval/metrics.hpp"
#include "prism/eval/protocol.hpp"
#include "prism/restoration/pipeline.hpp"

namespace prism {

/// The eight categories of the toy benchmark.
inline std::vector<Category> toy_categories() {
  return {Category::low_light, Category::brightness,     Category::contrast,     Category::color_shift,
          Category::haze,      Category::gaussian_noise, Category::defocus_blur, Category::pixelation};
}

inline DatasetConfig toy_dataset(std::size_t n_images, std::uint64_t seed = 42) {
  DatasetConfig c;
  c.n_images = n_images;
  c.global_seed = seed;
  c.kinds = kinds_for(toy_categories());
  return c;
}

struct DetectorRun {
  Detector detector;
  EncoderTrainResult encoder;
  std::vector<double> classifier_loss;
  F1Counts held_out;
};

/// Encoder on `enc_train`, then the classifier on `cls_train` embedded by the
/// frozen encoder; micro-F1 on `held`.
inline DetectorRun train_detector(const TrainingData& enc_train, const TrainingData& cls_train, const TrainingData& held,
                                  const TrainConfig& tc, const ClassifierConfig& cc,
                                  const TrainingData* validation = nullptr) {
  DetectorRun r;
  r.encoder = train_encoder(enc_train, tc, validation);
  auto cls = train_classifier(r.encoder.encoder, cls_train, cc);
  r.classifier_loss = std::move(cls.loss_log);
  r.detector = Detector{r.encoder.encoder, std::move(cls.head), kDefaultThreshold};
  if (!held.empty()) r.held_out = evaluate_classifier(r.detector.classifier, embed_dataset(r.encoder.encoder, held, false));
  return r;
}

struct HarnessConfig {
  std::size_t n_images = 2000;
  std::uint64_t seed = 42;
  std::vector<std::uint64_t> seeds = {42};
  TrainConfig train;
  ClassifierConfig classifier;
  std::size_t eval_items = 100;
  std::size_t geometry_cases = 200;
  std::vector<int> n_values = {1, 2, 3, 4};
  std::vector<WeightScheme> schemes = all_weight_schemes();
  std::function<void(const std::string&)> progress;

  void note(const std::string& s) const {
    if (progress) progress(s);
  }
};

inline HarnessConfig harness_config_from_json(const nlohmann::json& j, HarnessConfig c = {}) {
  try {
    c.n_images = j.value("n_images", c.n_images);
    c.seed = j.value("seed", c.seed);
    c.seeds = j.value("seeds", c.seeds);
    c.eval_items = j.value("eval_items", c.eval_items);
    c.geometry_cases = j.value("geometry_cases", c.geometry_cases);
    c.n_values = j.value("n_values", c.n_values);
    if (j.contains("schemes")) {
      c.schemes.clear();
      for (const auto& s : j.at("schemes")) c.schemes.push_back(parse_weight_scheme(s.get<std::string>()));
    }
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), c.train);
    if (j.contains("classifier")) c.classifier = classifier_config_from_json(j.at("classifier"), c.classifier);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("harness config: ") + e.what());
  }
  detail::require(!c.seeds.empty(), "harness config: seeds must not be empty");
  for (int n : c.n_values) detail::require(n >= 1 && n <= 8, "harness config: n_values must lie in [1,8]");
  return c;
}

struct NSweepRow {
  int n_max = 0;
  double psnr = 0.0;
  double ssim = 0.0;
  double stability = 0.0;  // variance of the per-epoch validation loss
  double f1 = 0.0;
  std::size_t eval_items = 0;
};

struct NSweepReport {
  std::vector<NSweepRow> rows;
  nlohmann::json config;

  nlohmann::json to_json() const {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& x : rows)
      r.push_back({{"n_max", x.n_max}, {"psnr", x.psnr}, {"ssim", x.ssim}, {"stability", x.stability},
                   {"f1", x.f1}, {"eval_items", x.eval_items}});
    return {{"rows", r},
            {"config", config},
            {"reference",
             {{"note", "full-scale values, not reproducible at toy scale"},
              {"columns", {"n_max", "psnr", "ssim", "lpips", "stability", "f1"}},
              {"rows",
               {{1, 24.35, 0.942, 0.112, 0.014, 0.91},
                {2, 20.65, 0.923, 0.126, 0.018, 0.88},
                {3, 18.73, 0.842, 0.218, 0.022, 0.87},
                {4, 16.98, 0.741, 0.401, 0.047, 0.61}}}}}};
  }

  std::string to_csv() const {
    std::string s = "n_max,psnr,ssim,stability,f1,eval_items\n";
    for (const auto& x : rows)
      s += std::to_string(x.n_max) + "," + std::to_string(x.psnr) + "," + std::to_string(x.ssim) + "," +
           std::to_string(x.stability) + "," + std::to_string(x.f1) + "," + std::to_string(x.eval_items) + "\n";
    return s;
  }
};

inline double variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

inline nlohmann::json harness_json(const HarnessConfig& cfg) {
  std::vector<std::string> schemes;
  for (auto s : cfg.schemes) schemes.emplace_back(name(s));
  return {{"n_images", cfg.n_images}, {"seed", cfg.seed},        {"seeds", cfg.seeds},
          {"epochs", cfg.train.epochs}, {"tau", cfg.train.tau}, {"classifier_epochs", cfg.classifier.epochs},
          {"eval_items", cfg.eval_items}, {"geometry_cases", cfg.geometry_cases}, {"n_values", cfg.n_values},
          {"schemes", schemes}};
}

/// Automated restoration of held-out single-distortion images.
inline MetricReport single_distortion_fidelity(const Detector& det, std::size_t n_images, std::size_t max_items,
                                               std::uint64_t seed) {
  DatasetConfig dc = toy_dataset(n_images, seed);
  dc.n_max = 1;
  const DatasetBuilder b(dc);
  MetricReport m;
  for (std::uint64_t id = 0; id < dc.n_images && m.count() < max_items; ++id) {
    if (assign_split(id, dc.split_fractions) == Split::train) continue;
    const auto it = b.make_item(id);
    const auto a = auto_restore(it.distorted, det, RestoreMode::composite, &it.depth);
    m.add(it.clean, a.result.image);
  }
  return m;
}

/// Retrains encoder and classifier per maximum distortion count.
inline NSweepReport n_sweep(const HarnessConfig& cfg) {
  NSweepReport rep;
  rep.config = harness_json(cfg);
  for (int n : cfg.n_values) {
    DatasetConfig dc = toy_dataset(cfg.n_images, cfg.seed);
    dc.n_max = n;
    const DatasetBuilder b(dc);
    cfg.note("n_max=" + std::to_string(n) + ": generating");
    const auto train = collect_groups(b, {Split::train});
    const auto val = collect_groups(b, {Split::val});
    const auto held = collect_groups(b, {Split::val, Split::test});
    NSweepRow row;
    row.n_max = n;
    std::vector<double> f1s, stabs, psnrs, ssims;
    for (auto seed : cfg.seeds) {
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      ClassifierConfig cc = cfg.classifier;
      cc.seed = seed;
      cfg.note("n_max=" + std::to_string(n) + " seed=" + std::to_string(seed) + ": training");
      const auto run = train_detector(train, train, held, tc, cc, &val);
      std::vector<double> vl;
      for (const auto& e : run.encoder.log)
        if (e.epoch > 0 && !std::isnan(e.val_loss)) vl.push_back(e.val_loss);
      stabs.push_back(variance(vl));
      f1s.push_back(run.held_out.f1());
      const auto m = single_distortion_fidelity(run.detector, cfg.n_images, cfg.eval_items, cfg.seed);
      psnrs.push_back(m.mean_psnr());
      ssims.push_back(m.mean_ssim());
      row.eval_items = m.count();
    }
    row.f1 = MetricReport::mean(f1s);
    row.stability = MetricReport::mean(stabs);
    row.psnr = MetricReport::mean(psnrs);
    row.ssim = MetricReport::mean(ssims);
    rep.rows.push_back(row);
  }
  return rep;
}

struct AblationRow {
  WeightScheme scheme{};
  std::vector<double> geometry;  // per seed
  std::vector<double> faithfulness;
  std::vector<double> f1;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  nlohmann::json config;

  nlohmann::json to_json() const {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& x : rows)
      r.push_back({{"scheme", std::string(name(x.scheme))},
                   {"geometry", x.geometry},
                   {"faithfulness", x.faithfulness},
                   {"f1", x.f1},
                   {"geometry_mean", MetricReport::mean(x.geometry)},
                   {"faithfulness_mean", MetricReport::mean(x.faithfulness)},
                   {"f1_mean", MetricReport::mean(x.f1)}});
    return {{"rows", r},
            {"config", config},
            {"reference",
             {{"note", "full-scale values, not reproducible at toy scale"},
              {"columns", {"scheme", "psnr", "ssim", "lpips"}},
              {"rows",
               {{"none", 19.52, 0.734, 0.154},
                {"unweighted", 20.63, 0.799, 0.388},
                {"cosine_labels", 21.49, 0.772, 0.429},
                {"overlap", 21.35, 0.784, 0.332},
                {"jaccard", 22.08, 0.842, 0.218}}}}}};
  }

  std::string to_csv() const {
    std::string s = "scheme,geometry,faithfulness,f1\n";
    for (const auto& x : rows)
      s += std::string(name(x.scheme)) + "," + std::to_string(MetricReport::mean(x.geometry)) + "," +
           std::to_string(MetricReport::mean(x.faithfulness)) + "," + std::to_string(MetricReport::mean(x.f1)) + "\n";
    return s;
  }
};

/// One encoder and classifier per weighting scheme and seed on shared data.
inline AblationReport weighting_ablation(const HarnessConfig& cfg) {
  AblationReport rep;
  rep.config = harness_json(cfg);
  const DatasetBuilder b(toy_dataset(cfg.n_images, cfg.seed));
  cfg.note("ablation: generating");
  const auto train = collect_groups(b, {Split::train});
  const auto held = collect_groups(b, {Split::val, Split::test});
  const auto geo = geometry_cases(b, cfg.geometry_cases, cfg.seed);
  const auto single = control_cases(b, cfg.eval_items, [](const Triplet& t) {
    return held_out(t) && t.mode == PromptMode::full && t.applied_specs.size() == 1;
  });
  for (auto scheme : cfg.schemes) {
    AblationRow row;
    row.scheme = scheme;
    for (auto seed : cfg.seeds) {
      TrainConfig tc = cfg.train;
      tc.scheme = scheme;
      tc.seed = seed;
      ClassifierConfig cc = cfg.classifier;
      cc.seed = seed;
      cfg.note("ablation: " + std::string(name(scheme)) + " seed=" + std::to_string(seed));
      const auto run = train_detector(train, train, held, tc, cc);
      row.geometry.push_back(geo.empty() ? 0.0 : geometry_pass_rate(run.detector.encoder, geo));
      row.faithfulness.push_back(faithfulness(run.detector, single).rate());
      row.f1.push_back(run.held_out.f1());
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace prism

#endif
