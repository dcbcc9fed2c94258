#ifndef PRISM_EVAL_CONTROLLABILITY_HPP
#define PRISM_EVAL_CONTROLLABILITY_HPP

#include <functional>
#include <vector>

#include <json.hpp>

#include "prism/dataset/builder.hpp"
#include "prism/eval/protocol.hpp"
#include "prism/prompts/request.hpp"
#include "prism/restoration/pipeline.hpp"

namespace prism {

struct ControlCase {
  GeneratedItem item;
  RestorationRequest request;
};

/// Items accepted by `keep`, with requests parsed back from their prompts.
inline std::vector<ControlCase> control_cases(const DatasetBuilder& builder, std::size_t max_cases,
                                              const std::function<bool(const Triplet&)>& keep) {
  std::vector<ControlCase> out;
  const auto& cfg = builder.config();
  for (std::uint64_t id = 0; id < cfg.n_images && out.size() < max_cases; ++id) {
    auto item = builder.make_item(id);
    if (!keep(item.triplet)) continue;
    auto req = request_from_prompt(item.triplet.prompt, item.triplet.applied_labels);
    out.push_back({std::move(item), std::move(req)});
  }
  return out;
}

inline bool held_out(const Triplet& t) { return t.split != Split::train; }

inline RestoreResult restore_oracle(const ControlCase& c, RestoreMode mode = RestoreMode::composite) {
  RestoreOptions opt;
  opt.mode = mode;
  opt.depth = &c.item.depth;
  opt.known_specs = c.item.triplet.applied_specs;
  return restore(c.request, c.item.distorted, opt);
}

struct RateReport {
  std::size_t cases = 0;
  std::size_t passed = 0;
  std::size_t skipped = 0;  // cases where the check is vacuous

  double rate() const { return cases == 0 ? 0.0 : static_cast<double>(passed) / static_cast<double>(cases); }
  nlohmann::json to_json() const { return {{"cases", cases}, {"passed", passed}, {"skipped", skipped}, {"rate", rate()}}; }
};

/// Oracle restoration under each case's request must return the input unchanged.
inline RateReport negative_identity(const std::vector<ControlCase>& cases) {
  RateReport r;
  for (const auto& c : cases) {
    const auto out = restore_oracle(c);
    ++r.cases;
    r.passed += out.plan.empty() && out.image == c.item.distorted;
  }
  return r;
}

/// Faithfulness of oracle restoration as judged by the detector.
inline RateReport faithfulness(const Detector& det, const std::vector<ControlCase>& cases) {
  RateReport r;
  for (const auto& c : cases) {
    const auto out = restore_oracle(c);
    ++r.cases;
    r.passed += prompt_faithfulness(det, c.item.distorted, out.image, c.request);
  }
  return r;
}

/// Non-targeted labels detected on the input stay detected on the output.
/// Cases with no detected non-targeted label are skipped.
inline RateReport preservation(const Detector& det, const std::vector<ControlCase>& cases) {
  RateReport r;
  for (const auto& c : cases) {
    const LabelSet kept = (det.detect(c.item.distorted) & c.item.triplet.applied_labels) - c.request.targets;
    if (kept.empty()) {
      ++r.skipped;
      continue;
    }
    const auto out = restore_oracle(c);
    ++r.cases;
    r.passed += kept.subset_of(det.detect(out.image));
  }
  return r;
}

}  // namespace prism

#endif
