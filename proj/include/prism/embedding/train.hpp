#ifndef PRISM_EMBEDDING_TRAIN_HPP
#define PRISM_EMBEDDING_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prism/core/error.hpp"
#include "prism/core/rng.hpp"
#include "prism/dataset/builder.hpp"
#include "prism/dataset/manifest.hpp"
#include "prism/distortions/labels.hpp"
#include "prism/embedding/checkpoint.hpp"
#include "prism/embedding/encoder.hpp"
#include "prism/embedding/layers.hpp"
#include "prism/embedding/losses.hpp"
#include "prism/embedding/optim.hpp"
#include "prism/prompts/grammar.hpp"

namespace prism {

inline constexpr double kDefaultThreshold = 0.85;

struct TrainConfig {
  double tau = 0.10;
  std::size_t batch_clean = 32;  // B
  std::size_t variants = 4;      // m, upper bound per clean image
  double learning_rate = 0.05;
  std::size_t epochs = 40;
  OptimizerKind optimizer = OptimizerKind::sgd;
  WeightScheme scheme = WeightScheme::jaccard;
  std::uint64_t seed = 42;
  std::size_t probe_hidden = 64;
  EncoderConfig encoder;

  void validate() const {
    detail::require(tau > 0.0 && std::isfinite(tau), "TrainConfig: tau must be positive");
    detail::require(batch_clean >= 2, "TrainConfig: batch must hold at least 2 clean images");
    detail::require(variants >= 1, "TrainConfig: need at least one variant per clean image");
    detail::require(learning_rate > 0.0, "TrainConfig: learning rate must be positive");
    detail::require(probe_hidden >= 1, "TrainConfig: probe hidden width must be positive");
  }
};

struct ClassifierConfig {
  std::size_t hidden = 512;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  bool cosine_decay = true;
  std::size_t epochs = 60;
  std::size_t batch = 64;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 42;
  bool include_clean = true;  // clean images as empty-label examples

  void validate() const {
    detail::require(hidden >= 1 && batch >= 1, "ClassifierConfig: bad sizes");
    detail::require(learning_rate > 0.0, "ClassifierConfig: learning rate must be positive");
  }
};

/// One clean image and its degraded variants, as raw feature vectors.
struct FeatureGroup {
  std::uint64_t clean_id = 0;
  Vec clean;
  std::vector<Vec> variants;
  std::vector<LabelSet> labels;
  std::vector<std::uint64_t> ids;
};

using TrainingData = std::vector<FeatureGroup>;

/// In-memory generation; keeps only items whose split is in `splits` (all when empty).
inline TrainingData collect_groups(const DatasetBuilder& builder, const std::vector<Split>& splits = {}) {
  TrainingData out;
  std::map<std::uint64_t, std::size_t> where;
  builder.for_each_item([&](GeneratedItem&& it) {
    const auto& t = it.triplet;
    if (!splits.empty() && std::find(splits.begin(), splits.end(), t.split) == splits.end()) return;
    auto [pos, fresh] = where.try_emplace(t.clean_id, out.size());
    if (fresh) out.push_back({t.clean_id, extract_features(it.clean), {}, {}, {}});
    auto& g = out[pos->second];
    g.variants.push_back(extract_features(it.distorted));
    g.labels.push_back(t.applied_labels);
    g.ids.push_back(t.id);
  });
  return out;
}

/// From a dataset directory written by DatasetBuilder::build.
inline TrainingData collect_groups(const std::filesystem::path& root, const std::vector<Triplet>& rows) {
  TrainingData out;
  std::map<std::uint64_t, std::size_t> where;
  for (const auto& t : rows) {
    const auto item = load_item(root, t);
    auto [pos, fresh] = where.try_emplace(t.clean_id, out.size());
    if (fresh) out.push_back({t.clean_id, extract_features(item.clean), {}, {}, {}});
    auto& g = out[pos->second];
    g.variants.push_back(extract_features(item.distorted));
    g.labels.push_back(t.applied_labels);
    g.ids.push_back(t.id);
  }
  return out;
}

inline Standardizer fit_standardizer(const TrainingData& data) {
  std::vector<Vec> rows;
  for (const auto& g : data) {
    rows.push_back(g.clean);
    rows.insert(rows.end(), g.variants.begin(), g.variants.end());
  }
  return Standardizer::fit(rows);
}

struct EpochLog {
  std::size_t epoch = 0;
  double ctr = 0.0;
  double qual = 0.0;
  double pos_cos = 0.0;
  double gap = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();  // L_ctr + L_qual on validation data
};

struct LatentStats {
  double pos_cos = 0.0;  // mean cos(variant, its clean)
  double gap = 0.0;      // mean (positive - hardest negative)
};

/// Negatives of a variant are the variants of the other groups in its chunk of `chunk` groups.
inline LatentStats latent_stats(const Encoder& enc, const TrainingData& data, std::size_t chunk = 32) {
  LatentStats s;
  std::size_t n = 0;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t end = std::min(data.size(), start + chunk);
    std::vector<Vec> clean;
    std::vector<std::vector<Vec>> vars;
    for (std::size_t g = start; g < end; ++g) {
      clean.push_back(enc.encode_features(data[g].clean));
      vars.emplace_back();
      for (const auto& v : data[g].variants) vars.back().push_back(enc.encode_features(v));
    }
    for (std::size_t g = 0; g < clean.size(); ++g)
      for (const auto& v : vars[g]) {
        const double pos = cosine(v, clean[g]);
        double hardest = -1.0;
        bool any = false;
        for (std::size_t h = 0; h < clean.size(); ++h)
          if (h != g)
            for (const auto& o : vars[h]) {
              hardest = std::max(hardest, cosine(v, o));
              any = true;
            }
        s.pos_cos += pos;
        s.gap += any ? pos - hardest : 0.0;
        ++n;
      }
  }
  if (n) {
    s.pos_cos /= static_cast<double>(n);
    s.gap /= static_cast<double>(n);
  }
  return s;
}

struct EncoderTrainResult {
  Encoder encoder;
  MultiLabelHead probe;
  std::vector<EpochLog> log;  // row 0 is the untrained state
};

namespace detail {
/// Chunks of `b` indices; a trailing singleton joins the previous chunk.
inline std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order, std::size_t b) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += b)
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + b)));
  if (out.size() >= 2 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back().front());
    out.pop_back();
  }
  return out;
}

struct EncodedGroup {
  Encoder::Cache clean;
  std::vector<Encoder::Cache> variants;
  std::vector<LabelSet> labels;
};

inline std::vector<EncodedGroup> encode_batch(const Encoder& enc, const TrainingData& data,
                                              const std::vector<std::size_t>& batch, std::size_t m, SeededRng& rng) {
  std::vector<EncodedGroup> out;
  for (std::size_t g : batch) {
    const auto& grp = data[g];
    std::vector<std::size_t> pick(grp.variants.size());
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    if (pick.size() > m) {
      rng.shuffle(pick);
      pick.resize(m);
      std::sort(pick.begin(), pick.end());
    }
    EncodedGroup e{enc.forward_features(grp.clean), {}, {}};
    for (std::size_t j : pick) {
      e.variants.push_back(enc.forward_features(grp.variants[j]));
      e.labels.push_back(grp.labels[j]);
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<GroupEmbeddings> embeddings_of(const std::vector<EncodedGroup>& enc) {
  std::vector<GroupEmbeddings> out;
  for (const auto& g : enc) {
    GroupEmbeddings ge{g.clean.e, {}, g.labels};
    for (const auto& v : g.variants) ge.variants.push_back(v.e);
    out.push_back(std::move(ge));
  }
  return out;
}

/// Mean per-variant BCE of the probe on detached variant embeddings; gradients go to the probe only.
inline double probe_bce(const MultiLabelHead& probe, const std::vector<EncodedGroup>& batch, MultiLabelHead& grad) {
  std::size_t n = 0;
  for (const auto& g : batch) n += g.variants.size();
  double loss = 0.0;
  Vec dz(probe.out_dim());
  for (const auto& g : batch)
    for (std::size_t j = 0; j < g.variants.size(); ++j) {
      const auto c = probe.forward(g.variants[j].e);
      const Vec y = g.labels[j].multi_hot();
      loss += bce_with_logits(c.z, y, dz) / static_cast<double>(n);
      for (double& v : dz) v /= static_cast<double>(n);
      probe.backward(c, dz, grad, {});
    }
  return loss;
}
}  // namespace detail

/// Mean L_ctr and L_qual over the data in fixed chunks, without updating anything.
inline std::pair<double, double> evaluate_encoder_loss(const Encoder& enc, const MultiLabelHead& probe,
                                                       const TrainingData& data, const TrainConfig& cfg) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SeededRng rng(cfg.seed);
  double ctr = 0.0, qual = 0.0;
  const auto batches = detail::make_batches(order, cfg.batch_clean);
  for (const auto& b : batches) {
    const auto eb = detail::encode_batch(enc, data, b, cfg.variants, rng);
    const auto l = batch_loss(detail::embeddings_of(eb), &probe, cfg.tau, cfg.scheme);
    ctr += l.ctr;
    qual += l.qual;
  }
  return {ctr / static_cast<double>(batches.size()), qual / static_cast<double>(batches.size())};
}

/// Trains encoder and quality probe jointly on L_ctr + L_qual; the probe also
/// learns to detect distortions from variant embeddings. With `validation`
/// each log row also carries the validation loss.
inline EncoderTrainResult train_encoder(const TrainingData& data, const TrainConfig& cfg,
                                        const TrainingData* validation = nullptr) {
  cfg.validate();
  if (data.size() < 2) throw InvalidArgument("train_encoder: need at least 2 clean images in the train split");
  EncoderTrainResult r{Encoder(cfg.encoder, child_seed(cfg.seed, 1)),
                       MultiLabelHead(cfg.encoder.dim, cfg.probe_hidden, kNumCategories, child_seed(cfg.seed, 2)),
                       {}};
  r.encoder.set_standardizer(fit_standardizer(data));
  Optimizer enc_opt(cfg.optimizer, cfg.learning_rate), probe_opt(cfg.optimizer, cfg.learning_rate);
  SeededRng rng(child_seed(cfg.seed, 3));

  auto record = [&](std::size_t epoch, double ctr, double qual) {
    const auto st = latent_stats(r.encoder, data, cfg.batch_clean);
    r.log.push_back({epoch, ctr, qual, st.pos_cos, st.gap});
    if (validation && validation->size() >= 2) {
      const auto [vc, vq] = evaluate_encoder_loss(r.encoder, r.probe, *validation, cfg);
      r.log.back().val_loss = vc + vq;
    }
  };
  {
    const auto [ctr, qual] = evaluate_encoder_loss(r.encoder, r.probe, data, cfg);
    record(0, ctr, qual);
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    const auto batches = detail::make_batches(order, cfg.batch_clean);
    double ctr = 0.0, qual = 0.0;
    for (const auto& b : batches) {
      const auto eb = detail::encode_batch(r.encoder, data, b, cfg.variants, rng);
      Encoder eg = r.encoder.zeros_like();
      MultiLabelHead pg = r.probe.zeros_like();
      const auto l = batch_loss(detail::embeddings_of(eb), &r.probe, cfg.tau, cfg.scheme, &pg);
      for (std::size_t g = 0; g < eb.size(); ++g) {
        r.encoder.backward(eb[g].clean, l.d_clean[g], eg);
        for (std::size_t j = 0; j < eb[g].variants.size(); ++j) r.encoder.backward(eb[g].variants[j], l.d_variants[g][j], eg);
      }
      detail::probe_bce(r.probe, eb, pg);
      enc_opt.step(r.encoder, eg);
      probe_opt.step(r.probe, pg);
      ctr += l.ctr;
      qual += l.qual;
    }
    if (!std::isfinite(ctr) || !std::isfinite(qual)) throw NumericError("train_encoder: non-finite loss");
    record(epoch, ctr / static_cast<double>(batches.size()), qual / static_cast<double>(batches.size()));
  }
  return r;
}

inline void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,L_ctr,L_qual,pos_cos,gap,val_loss\n";
  out.precision(10);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.ctr << ',' << e.qual << ',' << e.pos_cos << ',' << e.gap << ',';
    if (!std::isnan(e.val_loss)) out << e.val_loss;
    out << '\n';
  }
}

struct LabeledEmbedding {
  Embedding e;
  LabelSet labels;
};

/// Variant embeddings with their label sets, plus clean embeddings labeled empty when asked.
inline std::vector<LabeledEmbedding> embed_dataset(const Encoder& enc, const TrainingData& data, bool include_clean) {
  std::vector<LabeledEmbedding> out;
  for (const auto& g : data) {
    if (include_clean) out.push_back({enc.encode_features(g.clean), {}});
    for (std::size_t j = 0; j < g.variants.size(); ++j) out.push_back({enc.encode_features(g.variants[j]), g.labels[j]});
  }
  return out;
}

/// Two-layer MLP over standardized embeddings. The standardizer is fitted on
/// the training embeddings; unit-norm inputs are otherwise too small in scale.
struct ClassifierHead {
  Standardizer input;
  MultiLabelHead mlp;

  std::size_t in_dim() const noexcept { return mlp.in_dim(); }
  std::vector<double> predict(std::span<const double> e) const { return mlp.predict(input(e)); }

  template <class F>
  void for_each_tensor(const std::string& prefix, F&& f) {
    f(prefix + ".std.mean", input.mean, Shape{input.mean.size()});
    f(prefix + ".std.scale", input.scale, Shape{input.scale.size()});
    mlp.for_each_param(prefix, f);
  }
};

struct ClassifierTrainResult {
  ClassifierHead head;
  std::vector<double> loss_log;  // mean BCE per epoch
};

inline ClassifierTrainResult train_classifier(const std::vector<LabeledEmbedding>& items, const ClassifierConfig& cfg) {
  cfg.validate();
  if (items.empty()) throw InvalidArgument("train_classifier: empty train split");
  const std::size_t dim = items.front().e.size();
  std::vector<Vec> rows;
  for (const auto& it : items) rows.push_back(it.e);
  ClassifierTrainResult r{{Standardizer::fit(rows), MultiLabelHead(dim, cfg.hidden, kNumCategories, child_seed(cfg.seed, 11))},
                          {}};
  std::vector<Vec> x;
  for (const auto& row : rows) x.push_back(r.head.input(row));
  auto& mlp = r.head.mlp;
  Optimizer opt(cfg.optimizer, cfg.learning_rate, cfg.weight_decay);
  SeededRng rng(child_seed(cfg.seed, 12));
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Vec dz(kNumCategories);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.cosine_decay) opt.cosine_schedule(epoch, cfg.epochs);
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      MultiLabelHead g = mlp.zeros_like();
      for (std::size_t i = start; i < end; ++i) {
        const auto c = mlp.forward(x[order[i]]);
        total += bce_with_logits(c.z, items[order[i]].labels.multi_hot(), dz);
        for (double& v : dz) v *= inv;
        mlp.backward(c, dz, g, {});
      }
      opt.step(mlp, g);
    }
    if (!std::isfinite(total)) throw NumericError("train_classifier: non-finite loss");
    r.loss_log.push_back(total / static_cast<double>(items.size()));
  }
  return r;
}

inline ClassifierTrainResult train_classifier(const Encoder& frozen, const TrainingData& data,
                                              const ClassifierConfig& cfg) {
  return train_classifier(embed_dataset(frozen, data, cfg.include_clean), cfg);
}

/// { k : p_k > threshold }, strict.
inline LabelSet predict_labels(const std::vector<double>& probs, double threshold = kDefaultThreshold) {
  detail::require(threshold > 0.0 && threshold < 1.0, "predict_labels: threshold must lie in (0,1)");
  detail::require(probs.size() == kNumCategories, "predict_labels: expected one probability per category");
  LabelSet s;
  for (std::size_t k = 0; k < kNumCategories; ++k)
    if (probs[k] > threshold) s.insert(static_cast<Category>(k));
  return s;
}

inline LabelSet predict_labels(const ClassifierHead& classifier, std::span<const double> embedding,
                               double threshold = kDefaultThreshold) {
  return predict_labels(classifier.predict(embedding), threshold);
}

/// Fixed-style prompt for detected labels.
inline std::string to_auto_prompt(const LabelSet& labels) {
  if (labels.empty()) throw InvalidArgument("no distortions detected");
  return render_prompt(labels);
}

/// Frozen encoder plus classifier: image -> detected label set.
struct Detector {
  Encoder encoder;
  ClassifierHead classifier;
  double threshold = kDefaultThreshold;

  std::vector<double> probabilities(const Image& img) const { return classifier.predict(encoder.encode(img)); }
  LabelSet detect(const Image& img) const { return predict_labels(probabilities(img), threshold); }
};

inline void save_encoder(const std::filesystem::path& path, Encoder enc) {
  auto t = export_tensors(enc, "encoder");
  const auto& c = enc.config();
  t.push_back({"encoder.config", Shape{4},
               Vec{double(c.image_height), double(c.image_width), double(c.hidden), double(c.dim)}});
  write_checkpoint(path.string(), t);
}

namespace detail {
inline const NamedTensor& find_tensor(const std::vector<NamedTensor>& ts, const std::string& name) {
  for (const auto& t : ts)
    if (t.name == name) return t;
  throw ParseError("checkpoint: missing tensor " + name);
}
}  // namespace detail

inline Encoder load_encoder(const std::filesystem::path& path) {
  const auto ts = read_checkpoint(path.string());
  const auto& c = detail::find_tensor(ts, "encoder.config");
  if (c.data.size() != 4) throw ParseError("checkpoint: malformed encoder.config");
  EncoderConfig cfg{static_cast<int>(c.data[0]), static_cast<int>(c.data[1]), static_cast<std::size_t>(c.data[2]),
                    static_cast<std::size_t>(c.data[3])};
  Encoder enc(cfg);
  import_tensors(enc, "encoder", ts);
  return enc;
}

inline void save_classifier(const std::filesystem::path& path, ClassifierHead head) {
  auto t = export_tensors(head, "classifier");
  t.push_back({"classifier.config", Shape{3},
               Vec{double(head.mlp.in_dim()), double(head.mlp.hidden_dim()), double(head.mlp.out_dim())}});
  write_checkpoint(path.string(), t);
}

inline ClassifierHead load_classifier(const std::filesystem::path& path) {
  const auto ts = read_checkpoint(path.string());
  const auto& c = detail::find_tensor(ts, "classifier.config");
  if (c.data.size() != 3) throw ParseError("checkpoint: malformed classifier.config");
  const auto in = static_cast<std::size_t>(c.data[0]);
  ClassifierHead head{Standardizer(in), MultiLabelHead(in, static_cast<std::size_t>(c.data[1]), static_cast<std::size_t>(c.data[2]))};
  import_tensors(head, "classifier", ts);
  if (head.mlp.out_dim() != kNumCategories) throw ParseError("checkpoint: classifier must have one output per category");
  return head;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"tau", c.tau},
          {"batch_clean", c.batch_clean},
          {"variants", c.variants},
          {"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"optimizer", std::string(name(c.optimizer))},
          {"scheme", std::string(name(c.scheme))},
          {"seed", c.seed},
          {"probe_hidden", c.probe_hidden},
          {"encoder", {{"hidden", c.encoder.hidden}, {"dim", c.encoder.dim}}}};
}

/// Missing keys keep the values of `c`.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  try {
    c.tau = j.value("tau", c.tau);
    c.batch_clean = j.value("batch_clean", c.batch_clean);
    c.variants = j.value("variants", c.variants);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.epochs = j.value("epochs", c.epochs);
    if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    if (j.contains("scheme")) c.scheme = parse_weight_scheme(j.at("scheme").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.probe_hidden = j.value("probe_hidden", c.probe_hidden);
    if (j.contains("encoder")) {
      const auto& e = j.at("encoder");
      c.encoder.hidden = e.value("hidden", c.encoder.hidden);
      c.encoder.dim = e.value("dim", c.encoder.dim);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const ClassifierConfig& c) {
  return {{"hidden", c.hidden},   {"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
          {"cosine_decay", c.cosine_decay}, {"epochs", c.epochs},     {"batch", c.batch},
          {"optimizer", std::string(name(c.optimizer))}, {"seed", c.seed}, {"include_clean", c.include_clean}};
}

inline ClassifierConfig classifier_config_from_json(const nlohmann::json& j, ClassifierConfig c = {}) {
  try {
    c.hidden = j.value("hidden", c.hidden);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.cosine_decay = j.value("cosine_decay", c.cosine_decay);
    c.epochs = j.value("epochs", c.epochs);
    c.batch = j.value("batch", c.batch);
    if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    c.seed = j.value("seed", c.seed);
    c.include_clean = j.value("include_clean", c.include_clean);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("classifier config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace prism

#endif
