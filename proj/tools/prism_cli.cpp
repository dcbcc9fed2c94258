#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prism/dataset/builder.hpp"
#include "prism/embedding/train.hpp"
#include "prism/eval/controllability.hpp"
#include "prism/eval/harness.hpp"
#include "prism/eval/metrics.hpp"
#include "prism/eval/protocol.hpp"
#include "prism/eval/stats.hpp"
#include "prism/restoration/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prism;

namespace {

/// Bad flags or inputs, detected before any output is written.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config, out, in, prompt, manifest, split, scheme, study = "weighting";
  std::string encoder, classifier, depth, present, a, b;
  std::optional<std::uint64_t> seed, id;
  std::optional<double> tau, threshold;
  std::optional<std::size_t> epochs;
  bool automatic = false, sequential = false;
};

/// Runs `f`, reporting library errors as usage errors.
template <class F>
auto validated(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) throw UsageError(std::string(flag) + ": no such file: " + path);
}

void require_out(const std::string& out) {
  if (out.empty()) throw UsageError("--out is required");
}

json read_json(const std::string& path) {
  require_file(path, "--config");
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("--config: " + std::string(e.what()));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream o(path, std::ios::binary);
  if (!o) throw IoError("cannot write " + path.string());
  o << text;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// FNV-1a over the file bytes, stable across platforms and builds.
std::string digest(const fs::path& path) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : read_bytes(path)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

LabelSet parse_label_list(const std::string& s) {
  std::vector<std::string> names;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) names.push_back(tok);
  return labels_from_names(names);
}

std::vector<Triplet> manifest_rows(const Options& o, const std::string& default_split) {
  require_file(o.manifest, "--manifest");
  auto rows = validated([&] { return read_manifest(o.manifest); });
  const std::string s = o.split.empty() ? default_split : o.split;
  if (s != "all") rows = filter_split(rows, validated([&] { return parse_split(s); }));
  if (rows.empty()) throw UsageError("--split " + s + " selects no items");
  return rows;
}

fs::path manifest_root(const Options& o) { return fs::path(o.manifest).parent_path(); }

TrainConfig train_config(const Options& o) {
  TrainConfig c;
  if (!o.config.empty()) {
    const json j = read_json(o.config);
    c = validated([&] { return train_config_from_json(j.contains("train") ? j.at("train") : j); });
  }
  c.seed = o.seed.value_or(c.seed);
  if (o.tau) c.tau = *o.tau;
  if (o.epochs) c.epochs = *o.epochs;
  if (!o.scheme.empty()) c.scheme = validated([&] { return parse_weight_scheme(o.scheme); });
  validated([&] { c.validate(); return 0; });
  return c;
}

ClassifierConfig classifier_config(const Options& o) {
  ClassifierConfig c;
  if (!o.config.empty()) {
    const json j = read_json(o.config);
    c = validated([&] { return classifier_config_from_json(j.contains("classifier") ? j.at("classifier") : j); });
  }
  c.seed = o.seed.value_or(c.seed);
  if (o.epochs) c.epochs = *o.epochs;
  validated([&] { c.validate(); return 0; });
  return c;
}

double threshold_of(const Options& o) {
  const double t = o.threshold.value_or(kDefaultThreshold);
  if (!(t > 0.0 && t < 1.0)) throw UsageError("--threshold must lie in (0,1)");
  return t;
}

Detector load_detector(const Options& o) {
  require_file(o.encoder, "--encoder");
  require_file(o.classifier, "--classifier");
  return validated([&] {
    Detector d{load_encoder(o.encoder), load_classifier(o.classifier), threshold_of(o)};
    detail::require(d.classifier.mlp.in_dim() == d.encoder.config().dim, "classifier does not match encoder");
    return d;
  });
}

int cmd_gen(const Options& o) {
  require_out(o.out);
  DatasetConfig c;
  if (!o.config.empty()) {
    const json j = read_json(o.config);
    c = validated([&] { return dataset_config_from_json(j.contains("dataset") ? j.at("dataset") : j); });
  }
  if (o.seed) c.global_seed = *o.seed;
  const DatasetBuilder b = validated([&] { return DatasetBuilder(c); });
  const auto rows = b.build(o.out);
  std::cout << "items " << rows.size() << "\n";
  std::cout << "manifest " << (fs::path(o.out) / "manifest.jsonl").string() << "\n";
  std::cout << "digest " << digest(fs::path(o.out) / "manifest.jsonl") << "\n";
  return 0;
}

int cmd_train_encoder(const Options& o) {
  require_out(o.out);
  const auto rows = manifest_rows(o, "train");
  const auto cfg = train_config(o);
  const auto data = collect_groups(manifest_root(o), rows);
  auto r = train_encoder(data, cfg);
  save_encoder(o.out, r.encoder);
  write_training_log(o.out + ".log.csv", r.log);
  write_text(o.out + ".config.json", to_json(cfg).dump(2) + "\n");
  const auto& last = r.log.back();
  std::cout << "epochs " << cfg.epochs << " ctr " << last.ctr << " qual " << last.qual << "\n";
  return 0;
}

int cmd_train_classifier(const Options& o) {
  require_out(o.out);
  require_file(o.encoder, "--encoder");
  const auto rows = manifest_rows(o, "train");
  const auto cfg = classifier_config(o);
  const Encoder enc = validated([&] { return load_encoder(o.encoder); });
  const auto data = collect_groups(manifest_root(o), rows);
  auto r = train_classifier(enc, data, cfg);
  save_classifier(o.out, r.head);
  const auto f1 = evaluate_classifier(r.head, embed_dataset(enc, data, false), threshold_of(o));
  std::cout << "final_loss " << r.loss_log.back() << " train_f1 " << f1.f1() << "\n";
  return 0;
}

int cmd_classify(const Options& o) {
  require_file(o.in, "--in");
  const auto det = load_detector(o);
  const Image img = validated([&] { return read_image(o.in); });
  const auto probs = det.probabilities(img);
  const auto labels = predict_labels(probs, det.threshold);
  json p = json::object();
  for (std::size_t i = 0; i < kNumCategories; ++i) p[std::string(name(static_cast<Category>(i)))] = probs[i];
  json j = {{"labels", labels.names()}, {"probabilities", p}, {"threshold", det.threshold}};
  if (!labels.empty()) j["prompt"] = to_auto_prompt(labels);
  const std::string text = j.dump(2) + "\n";
  if (!o.out.empty()) write_text(o.out, text);
  std::cout << text;
  return 0;
}

/// What the restorer knows about an input image besides its pixels.
struct Context {
  Image image;
  std::optional<DepthMap> depth;
  std::optional<std::vector<DistortionSpec>> specs;
  std::optional<LabelSet> present;
  std::optional<Detector> detector;
};

Context load_context(const Options& o) {
  Context c;
  if (!o.manifest.empty() || o.id) {
    if (!o.id) throw UsageError("--manifest needs --id");
    require_file(o.manifest, "--manifest");
    const auto rows = validated([&] { return read_manifest(o.manifest); });
    const auto it = std::find_if(rows.begin(), rows.end(), [&](const Triplet& t) { return t.id == *o.id; });
    if (it == rows.end()) throw UsageError("--id " + std::to_string(*o.id) + " not in manifest");
    const auto item = validated([&] { return load_item(manifest_root(o), *it); });
    c.specs = it->applied_specs;
    c.depth = item.depth;
    c.image = o.in.empty() ? item.distorted : Image{};
  }
  if (!o.in.empty()) {
    require_file(o.in, "--in");
    c.image = validated([&] { return read_image(o.in); });
  }
  if (c.image.empty()) throw UsageError("--in or --manifest/--id is required");
  if (!o.depth.empty()) {
    require_file(o.depth, "--depth");
    c.depth = validated([&] { return read_depth(o.depth); });
  }
  if (!o.present.empty()) c.present = validated([&] { return parse_label_list(o.present); });
  if (!o.encoder.empty() || !o.classifier.empty() || o.automatic) c.detector = load_detector(o);
  return c;
}

RestoreOptions restore_options(const Context& c, const Options& o) {
  RestoreOptions opt;
  opt.mode = o.sequential ? RestoreMode::sequential : RestoreMode::composite;
  opt.depth = c.depth ? &*c.depth : nullptr;
  opt.known_specs = c.specs;
  opt.present = c.present;
  if (!opt.known_specs && !opt.present && c.detector) opt.present = c.detector->detect(c.image);
  return opt;
}

json plan_report(const RestoreResult& r, const std::optional<std::string>& prompt) {
  json j = {{"plan", to_json(r.plan)}, {"warnings", r.warnings}};
  if (prompt) j["prompt"] = *prompt;
  return j;
}

int cmd_restore(const Options& o) {
  require_out(o.out);
  if (o.automatic == !o.prompt.empty()) throw UsageError("exactly one of --prompt and --auto is required");
  const Context c = load_context(o);
  std::optional<RestorationRequest> req;
  if (!o.automatic) {
    const std::optional<LabelSet> applied =
        c.specs ? std::optional<LabelSet>(kinds_to_labels(kinds_of(*c.specs))) : std::nullopt;
    req = validated([&] { return request_from_prompt(o.prompt, applied); });
  }
  RestoreResult r;
  std::optional<std::string> prompt = o.prompt.empty() ? std::nullopt : std::optional<std::string>(o.prompt);
  if (o.automatic) {
    auto a = auto_restore(c.image, *c.detector, o.sequential ? RestoreMode::sequential : RestoreMode::composite,
                          c.depth ? &*c.depth : nullptr);
    r = std::move(a.result);
    prompt = a.prompt;
  } else {
    r = restore(*req, c.image, restore_options(c, o));
  }
  write_image(r.image, o.out);
  write_text(o.out + ".plan.json", plan_report(r, prompt).dump(2) + "\n");
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "steps " << r.plan.steps.size() << "\n";
  return 0;
}

int cmd_session(const Options& o) {
  require_out(o.out);
  Context c = load_context(o);
  if (!c.specs && !c.present && c.detector) c.present = c.detector->detect(c.image);
  fs::create_directories(o.out);
  std::size_t step = 0;
  std::string line;
  std::cout << "> " << std::flush;
  while (std::getline(std::cin, line)) {
    if (line == "quit" || line == "exit") break;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      std::cout << "> " << std::flush;
      continue;
    }
    try {
      const auto req = request_from_prompt(line);
      auto r = restore(req, c.image, restore_options(c, o));
      ++step;
      char stem[32];
      std::snprintf(stem, sizeof stem, "step_%03zu", step);
      const fs::path img = fs::path(o.out) / (std::string(stem) + ".png");
      write_image(r.image, img);
      write_text(img.string() + ".plan.json", plan_report(r, line).dump(2) + "\n");
      std::cout << img.string() << " steps " << r.plan.steps.size() << "\n";
      for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
      // Restored categories no longer count as present in later steps.
      const LabelSet done = r.plan.categories();
      if (c.specs)
        std::erase_if(*c.specs, [&](const DistortionSpec& s) { return done.contains(Grouping{}.category(s.kind)); });
      if (c.present) *c.present = *c.present - done;
      c.image = std::move(r.image);
    } catch (const Error& e) {
      std::cout << "error: " << e.what() << "\n";
    }
    std::cout << "> " << std::flush;
  }
  std::cout << "\n";
  return 0;
}

int cmd_eval(const Options& o) {
  require_out(o.out);
  const auto rows = manifest_rows(o, "test");
  const auto det = load_detector(o);
  const auto root = manifest_root(o);
  F1Counts f1;
  MetricReport automated, degraded;
  std::vector<ControlCase> cases;
  for (const auto& t : rows) {
    auto item = load_item(root, t);
    if (!item.depth) throw IoError("manifest item " + std::to_string(t.id) + " has no depth map");
    f1.add(det.detect(item.distorted), t.applied_labels);
    const auto a = auto_restore(item.distorted, det, RestoreMode::composite, &*item.depth);
    automated.add(item.clean, a.result.image);
    degraded.add(item.clean, item.distorted);
    cases.push_back({GeneratedItem{item.clean, *item.depth, item.distorted, t},
                     request_from_prompt(t.prompt, t.applied_labels)});
  }
  std::vector<ControlCase> negative, single, partial;
  for (const auto& c : cases) {
    if (c.item.triplet.mode == PromptMode::negative) negative.push_back(c);
    if (c.item.triplet.mode == PromptMode::full && c.item.triplet.applied_specs.size() == 1) single.push_back(c);
    if (c.item.triplet.mode == PromptMode::partial) partial.push_back(c);
  }
  const json report = {
      {"items", rows.size()},
      {"threshold", det.threshold},
      {"classifier", {{"f1", f1.f1()}, {"precision", f1.precision()}, {"recall", f1.recall()}}},
      {"degraded", {{"mean_psnr", degraded.mean_psnr()}, {"mean_ssim", degraded.mean_ssim()}}},
      {"automated", {{"mean_psnr", automated.mean_psnr()}, {"mean_ssim", automated.mean_ssim()}}},
      {"negative_identity", negative_identity(negative).to_json()},
      {"faithfulness", faithfulness(det, single).to_json()},
      {"preservation", preservation(det, partial).to_json()}};
  write_text(o.out, report.dump(2) + "\n");
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_diag(const Options& o) {
  require_out(o.out);
  const auto train_rows = manifest_rows(o, "train");
  Options held = o;
  held.split = "val";
  const auto eval_rows = manifest_rows(held, "val");
  const auto cfg = train_config(o);
  std::vector<double> taus(kTauSweep.begin(), kTauSweep.end());
  if (o.tau) taus = {*o.tau};
  std::vector<std::uint64_t> seeds = {42, 43, 44};
  if (o.seed) seeds = {*o.seed};
  const auto root = manifest_root(o);
  const auto d = latent_diagnostics(collect_groups(root, train_rows), collect_groups(root, eval_rows), cfg, taus, seeds);
  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "tau_sweep.json", d.to_json().dump(2) + "\n");
  write_text(fs::path(o.out) / "tau_sweep.csv", d.to_csv());
  std::cout << d.to_csv();
  return 0;
}

int cmd_ablate(const Options& o) {
  require_out(o.out);
  if (o.study != "nsweep" && o.study != "weighting") throw UsageError("--study must be nsweep or weighting");
  HarnessConfig cfg;
  if (!o.config.empty()) {
    const json j = read_json(o.config);
    cfg = validated([&] { return harness_config_from_json(j); });
  }
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.seeds = {*o.seed};
  }
  if (o.tau) cfg.train.tau = *o.tau;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (!o.scheme.empty()) cfg.schemes = {validated([&] { return parse_weight_scheme(o.scheme); })};
  validated([&] { cfg.train.validate(); return 0; });
  cfg.progress = [](const std::string& s) { std::cerr << s << "\n"; };
  fs::create_directories(o.out);
  const fs::path out(o.out);
  if (o.study == "nsweep") {
    const auto r = n_sweep(cfg);
    write_text(out / "nsweep.json", r.to_json().dump(2) + "\n");
    write_text(out / "nsweep.csv", r.to_csv());
    std::cout << r.to_csv();
  } else {
    const auto r = weighting_ablation(cfg);
    write_text(out / "weighting.json", r.to_json().dump(2) + "\n");
    write_text(out / "weighting.csv", r.to_csv());
    std::cout << r.to_csv();
  }
  return 0;
}

/// Numbers from the first column of a CSV file; a non-numeric first row is a header.
std::vector<double> read_column(const std::string& path, const char* flag) {
  require_file(path, flag);
  std::ifstream in(path);
  std::vector<double> v;
  std::string line;
  for (std::size_t row = 0; std::getline(in, line); ++row) {
    const std::string cell = line.substr(0, line.find(','));
    if (cell.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
    } catch (const std::exception&) {
      if (row == 0) continue;
      throw UsageError(std::string(flag) + ": not a number: '" + cell + "'");
    }
  }
  return v;
}

int cmd_ttest(const Options& o) {
  const auto a = read_column(o.a, "--a"), b = read_column(o.b, "--b");
  const auto r = validated([&] { return paired_t_test(a, b); });
  const std::string text = r.to_json().dump(2) + "\n";
  if (!o.out.empty()) write_text(o.out, text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compound-degradation synthesis, embedding, restoration and evaluation"};
  app.require_subcommand(1);
  Options o;

  auto seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "Seed; overrides the config (default 42)"); };
  auto config = [&](CLI::App* s, const char* what) { s->add_option("--config", o.config, what); };
  auto out = [&](CLI::App* s, const char* what) { s->add_option("--out", o.out, what); };
  auto manifest = [&](CLI::App* s) {
    s->add_option("--manifest", o.manifest, "Dataset manifest.jsonl");
    s->add_option("--split", o.split, "train, val, test or all");
  };
  auto detector = [&](CLI::App* s) {
    s->add_option("--encoder", o.encoder, "Encoder checkpoint");
    s->add_option("--classifier", o.classifier, "Classifier checkpoint");
    s->add_option("--threshold", o.threshold, "Detection threshold (default 0.85)");
  };
  auto training = [&](CLI::App* s) {
    s->add_option("--scheme", o.scheme, "jaccard, cosine_labels, overlap, unweighted or none");
    s->add_option("--tau", o.tau, "Contrastive temperature");
    s->add_option("--epochs", o.epochs, "Training epochs");
  };
  auto source = [&](CLI::App* s) {
    s->add_option("--in", o.in, "Input image");
    s->add_option("--manifest", o.manifest, "Manifest holding the item's specs (oracle mode)");
    s->add_option("--id", o.id, "Item id within --manifest");
    s->add_option("--depth", o.depth, "Depth map for the input");
    s->add_option("--present", o.present, "Comma-separated categories present in the input");
    s->add_flag("--sequential", o.sequential, "Apply inverses one at a time in request order");
    detector(s);
  };

  auto* gen = app.add_subcommand("gen", "Generate a dataset");
  config(gen, "Dataset config JSON");
  out(gen, "Output directory");
  seed(gen);

  auto* te = app.add_subcommand("train-encoder", "Train the embedding encoder");
  config(te, "Training config JSON");
  out(te, "Checkpoint path");
  manifest(te);
  training(te);
  seed(te);

  auto* tc = app.add_subcommand("train-classifier", "Train the classifier on a frozen encoder");
  config(tc, "Classifier config JSON");
  out(tc, "Checkpoint path");
  manifest(tc);
  tc->add_option("--encoder", o.encoder, "Encoder checkpoint");
  tc->add_option("--threshold", o.threshold, "Threshold for the reported F1");
  tc->add_option("--epochs", o.epochs, "Training epochs");
  seed(tc);

  auto* cl = app.add_subcommand("classify", "Detect distortions in an image");
  cl->add_option("--in", o.in, "Input image");
  out(cl, "Optional JSON report path");
  detector(cl);

  auto* re = app.add_subcommand("restore", "Restore an image from a prompt or automatically");
  source(re);
  re->add_option("--prompt", o.prompt, "Restoration prompt");
  re->add_flag("--auto", o.automatic, "Detect distortions and restore all of them");
  out(re, "Output image; the plan goes to <out>.plan.json");

  auto* se = app.add_subcommand("session", "Stepwise restoration, one prompt per line on stdin");
  source(se);
  out(se, "Output directory for numbered steps");

  auto* ev = app.add_subcommand("eval", "Classifier, restoration and controllability report");
  manifest(ev);
  detector(ev);
  out(ev, "JSON report path");

  auto* di = app.add_subcommand("diag", "Temperature sweep of latent diagnostics");
  config(di, "Training config JSON");
  out(di, "Output directory");
  manifest(di);
  training(di);
  seed(di);

  auto* ab = app.add_subcommand("ablate", "Toy-scale n-sweep or weighting ablation");
  config(ab, "Harness config JSON");
  out(ab, "Output directory");
  ab->add_option("--study", o.study, "nsweep or weighting");
  training(ab);
  seed(ab);

  auto* tt = app.add_subcommand("ttest", "Paired t-test of two CSV columns (b - a)");
  tt->add_option("--a", o.a, "Baseline scores");
  tt->add_option("--b", o.b, "Comparison scores");
  out(tt, "Optional JSON report path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*te) return cmd_train_encoder(o);
    if (*tc) return cmd_train_classifier(o);
    if (*cl) return cmd_classify(o);
    if (*re) return cmd_restore(o);
    if (*se) return cmd_session(o);
    if (*ev) return cmd_eval(o);
    if (*di) return cmd_diag(o);
    if (*ab) return cmd_ablate(o);
    if (*tt) return cmd_ttest(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
