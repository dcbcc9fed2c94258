#ifndef PRISM_RESTORATION_PIPELINE_HPP
#define PRISM_RESTORATION_PIPELINE_HPP

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "prism/core/image.hpp"
#include "prism/distortions/labels.hpp"
#include "prism/distortions/spec.hpp"
#include "prism/embedding/train.hpp"
#include "prism/prompts/request.hpp"
#include "prism/restoration/inverse.hpp"

namespace prism {

enum class RestoreMode { composite, sequential };
enum class PlanSource { manual, automated };

inline std::string_view name(RestoreMode m) noexcept { return m == RestoreMode::composite ? "composite" : "sequential"; }
inline std::string_view name(PlanSource s) noexcept { return s == PlanSource::manual ? "manual" : "automated"; }

struct PlanStep {
  Category category;
  std::string inverse;
  InverseHints hints;
};

struct RestorationPlan {
  std::vector<PlanStep> steps;
  RestoreMode mode = RestoreMode::composite;
  PlanSource source = PlanSource::manual;

  bool empty() const noexcept { return steps.empty(); }
  std::vector<Category> order() const {
    std::vector<Category> v;
    for (const auto& s : steps) v.push_back(s.category);
    return v;
  }
  LabelSet categories() const {
    LabelSet s;
    for (const auto& st : steps) s.insert(st.category);
    return s;
  }
};

inline nlohmann::json to_json(const RestorationPlan& p) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : p.steps) {
    nlohmann::json specs = nlohmann::json::array();
    for (const auto& sp : s.hints.specs) specs.push_back(to_json(sp));
    nlohmann::json est = nlohmann::json::object();
    for (const auto& [k, v] : s.hints.estimates) est[k] = v;
    steps.push_back({{"category", std::string(name(s.category))},
                     {"inverse", s.inverse},
                     {"oracle_specs", specs},
                     {"estimates", est}});
  }
  return {{"mode", std::string(name(p.mode))}, {"source", std::string(name(p.source))}, {"steps", steps}};
}

/// Steps for targets that are present. Composite mode uses the canonical
/// order; sequential mode keeps the request's mention order, then appends
/// anything unmentioned canonically.
inline RestorationPlan plan(const RestorationRequest& request, const LabelSet& present, RestoreMode mode,
                            PlanSource source = PlanSource::manual) {
  RestorationPlan p;
  p.mode = mode;
  p.source = source;
  const LabelSet active = request.targets & present;
  std::vector<Category> order;
  if (mode == RestoreMode::sequential)
    for (Category c : request.order)
      if (active.contains(c) && std::find(order.begin(), order.end(), c) == order.end()) order.push_back(c);
  for (Category c : kCanonicalOrder)
    if (active.contains(c) && std::find(order.begin(), order.end(), c) == order.end()) order.push_back(c);
  for (Category c : order) p.steps.push_back({c, std::string(inverse_name(c, false)), {}});
  return p;
}

/// Attaches the oracle specs of each step's category, in application order.
inline void attach_oracle(RestorationPlan& p, const std::vector<DistortionSpec>& known_specs,
                          const Grouping& grouping = {}) {
  for (auto& step : p.steps) {
    step.hints.specs.clear();
    for (const auto& s : known_specs)
      if (grouping.category(s.kind) == step.category) step.hints.specs.push_back(s);
    step.inverse = std::string(inverse_name(step.category, step.hints.oracle()));
  }
}

struct RestoreResult {
  Image image;
  RestorationPlan plan;
  std::vector<std::string> warnings;
};

/// Runs a plan. Blind steps estimate their hints from the image they receive.
inline RestoreResult execute(RestorationPlan p, const Image& img, const DepthMap* depth = nullptr) {
  RestoreResult r{img, {}, {}};
  for (auto& step : p.steps) {
    if (!step.hints.oracle() && step.hints.estimates.empty()) step.hints = estimate_hints(step.category, r.image);
    r.image = invert(step.category, r.image, step.hints, depth, &r.warnings);
  }
  r.plan = std::move(p);
  return r;
}

struct RestoreOptions {
  RestoreMode mode = RestoreMode::composite;
  const DepthMap* depth = nullptr;
  std::optional<std::vector<DistortionSpec>> known_specs;  // oracle mode
  std::optional<LabelSet> present;                          // detected or declared distortions
};

/// Prompt-conditioned restoration. The present set comes from the oracle
/// specs, else from `present`, else the request's own targets.
inline RestoreResult restore(const RestorationRequest& request, const Image& img, const RestoreOptions& opt = {}) {
  detail::require(!img.empty(), "restore: empty image");
  LabelSet present = request.targets;
  if (opt.known_specs)
    present = kinds_to_labels(kinds_of(*opt.known_specs));
  else if (opt.present)
    present = *opt.present;
  RestorationPlan p = plan(request, present, opt.mode);
  if (p.empty()) return {img, std::move(p), {}};
  if (opt.known_specs) attach_oracle(p, *opt.known_specs);
  return execute(std::move(p), img, opt.depth);
}

struct AutoRestoreResult {
  RestoreResult result;
  LabelSet detected;
  std::optional<std::string> prompt;  // absent when nothing was detected
};

/// Detects distortions with the frozen classifier and restores them blind.
inline AutoRestoreResult auto_restore(const Image& img, const Detector& detector, RestoreMode mode = RestoreMode::composite,
                                      const DepthMap* depth = nullptr) {
  AutoRestoreResult a;
  a.detected = detector.detect(img);
  if (a.detected.empty()) {
    a.result = {img, RestorationPlan{{}, mode, PlanSource::automated}, {"no distortions detected"}};
    return a;
  }
  a.prompt = to_auto_prompt(a.detected);
  RestorationRequest req = request_from_prompt(*a.prompt);
  req.targets = a.detected;
  RestorationPlan p = plan(req, a.detected, mode, PlanSource::automated);
  a.result = execute(std::move(p), img, depth);
  return a;
}

}  // namespace prism

#endif
