#ifndef PRISM_PROMPTS_REQUEST_HPP
#define PRISM_PROMPTS_REQUEST_HPP

#include <optional>
#include <string>
#include <vector>

#include "prism/prompts/grammar.hpp"

namespace prism {

enum class PromptMode { full, partial, negative };

inline std::string_view name(PromptMode m) noexcept {
  switch (m) {
    case PromptMode::full: return "full";
    case PromptMode::partial: return "partial";
    case PromptMode::negative: return "negative";
  }
  return "?";
}

inline PromptMode parse_prompt_mode(std::string_view s) {
  if (s == "full") return PromptMode::full;
  if (s == "partial") return PromptMode::partial;
  if (s == "negative") return PromptMode::negative;
  throw ParseError("unknown prompt mode '" + std::string(s) + "'");
}

struct RestorationRequest {
  LabelSet targets;
  PromptMode mode = PromptMode::full;
  std::string surface_text;
  std::vector<Category> order;  // mention order; used by sequential restoration
};

/// True when `r` obeys its mode's relation to the applied set.
inline bool satisfies_mode(const RestorationRequest& r, const LabelSet& applied) {
  switch (r.mode) {
    case PromptMode::full: return r.targets == applied && !applied.empty();
    case PromptMode::partial: return !r.targets.empty() && r.targets.subset_of(applied) && r.targets != applied;
    case PromptMode::negative: return !r.targets.empty() && r.targets.disjoint(applied);
  }
  return false;
}

/// Mode implied by a target set against what was applied; nullopt for mixed requests.
inline std::optional<PromptMode> infer_mode(const LabelSet& targets, const LabelSet& applied) {
  if (targets.empty()) return std::nullopt;
  if (targets == applied) return PromptMode::full;
  if (targets.subset_of(applied)) return PromptMode::partial;
  if (targets.disjoint(applied)) return PromptMode::negative;
  return std::nullopt;
}

namespace detail {
inline RestorationRequest finish_request(LabelSet targets, PromptMode mode, PromptStyle style, SeededRng& rng,
                                         const PromptGrammar& g) {
  RestorationRequest r{targets, mode, g.render(targets, style, rng), {}};
  r.order = g.parse(r.surface_text).mention_order();
  return r;
}
}  // namespace detail

inline RestorationRequest make_full(const LabelSet& applied, SeededRng& rng, PromptStyle style = PromptStyle::fixed,
                                    const PromptGrammar& g = PromptGrammar::builtin()) {
  detail::require(!applied.empty(), "make_full: empty applied set");
  return detail::finish_request(applied, PromptMode::full, style, rng, g);
}

/// Uniform over the 2^n - 2 strict non-empty subsets of `applied`.
inline RestorationRequest make_partial(const LabelSet& applied, SeededRng& rng, PromptStyle style = PromptStyle::fixed,
                                       const PromptGrammar& g = PromptGrammar::builtin()) {
  const auto members = applied.members();
  detail::require(members.size() >= 2, "make_partial: need at least two applied categories");
  const auto mask = static_cast<std::uint64_t>(rng.uniform_int(1, (std::int64_t{1} << members.size()) - 2));
  LabelSet t;
  for (std::size_t i = 0; i < members.size(); ++i)
    if (mask >> i & 1u) t.insert(members[i]);
  return detail::finish_request(t, PromptMode::partial, style, rng, g);
}

/// Picks min(|applied|, |complement|) absent categories, uniformly without replacement.
inline RestorationRequest make_negative(const LabelSet& applied, SeededRng& rng,
                                        PromptStyle style = PromptStyle::fixed,
                                        const PromptGrammar& g = PromptGrammar::builtin()) {
  auto pool = applied.complement().members();
  detail::require(!pool.empty(), "make_negative: applied set covers every category");
  const std::size_t k = std::max<std::size_t>(1, std::min(applied.size(), pool.size()));
  rng.shuffle(pool);
  LabelSet t;
  for (std::size_t i = 0; i < k; ++i) t.insert(pool[i]);
  return detail::finish_request(t, PromptMode::negative, style, rng, g);
}

/// Request from free text. The mode is inferred when the applied set is known.
inline RestorationRequest request_from_prompt(std::string_view text, const std::optional<LabelSet>& applied = {},
                                              const PromptGrammar& g = PromptGrammar::builtin()) {
  const auto parsed = g.parse(text);
  RestorationRequest r{parsed.targets, PromptMode::full, std::string(text), parsed.mention_order()};
  if (applied) {
    if (auto m = infer_mode(parsed.targets, *applied)) r.mode = *m;
  }
  return r;
}

}  // namespace prism

#endif
