#ifndef PRISM_PROMPTS_GRAMMAR_HPP
#define PRISM_PROMPTS_GRAMMAR_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prism/core/error.hpp"
#include "prism/core/rng.hpp"
#include "prism/distortions/labels.hpp"

namespace prism {

enum class PromptStyle { fixed, varied };

inline std::string_view name(PromptStyle s) noexcept { return s == PromptStyle::fixed ? "fixed" : "varied"; }

inline PromptStyle parse_prompt_style(std::string_view s) {
  if (s == "fixed") return PromptStyle::fixed;
  if (s == "varied") return PromptStyle::varied;
  throw ParseError("unknown prompt style '" + std::string(s) + "'");
}

/// Raised when a prompt mentions no known distortion. Carries the leftover words
/// so callers can show the user what was not understood.
class NoTargetsError : public InvalidArgument {
 public:
  explicit NoTargetsError(std::vector<std::string> unmatched)
      : InvalidArgument(message(unmatched)), unmatched_(std::move(unmatched)) {}
  const std::vector<std::string>& unmatched() const noexcept { return unmatched_; }

 private:
  static std::string message(const std::vector<std::string>& words) {
    std::string m = "no recognizable distortion terms in prompt";
    if (!words.empty()) {
      m += " (unmatched:";
      for (const auto& w : words) m += " " + w;
      m += ")";
    }
    return m;
  }
  std::vector<std::string> unmatched_;
};

/// Lowercases and splits on anything that is not alphanumeric or a hyphen.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.front() == '-') cur.erase(cur.begin());
    while (!cur.empty() && cur.back() == '-') cur.pop_back();
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isalnum(u) || ch == '-')
      cur.push_back(static_cast<char>(std::tolower(u)));
    else
      flush();
  }
  flush();
  return out;
}

struct MatchedSpan {
  std::size_t begin = 0;  // token index, inclusive
  std::size_t end = 0;    // exclusive
  Category category{};
};

struct ParsedPrompt {
  std::vector<std::string> tokens;
  std::vector<MatchedSpan> spans;
  LabelSet targets;
  std::vector<std::string> unmatched_tokens;
  std::vector<std::string> modifiers;  // subset of unmatched_tokens the grammar knows as intensity/location words

  /// Categories in order of first mention.
  std::vector<Category> mention_order() const {
    std::vector<Category> order;
    for (const auto& s : spans)
      if (std::find(order.begin(), order.end(), s.category) == order.end()) order.push_back(s.category);
    return order;
  }
};

class PromptGrammar {
 public:
  struct Entry {
    std::string display;
    std::vector<std::string> nouns;
    std::vector<std::string> fused;
  };

  static PromptGrammar from_json(const nlohmann::json& j) {
    PromptGrammar g;
    try {
      const auto& cats = j.at("categories");
      for (auto it = cats.begin(); it != cats.end(); ++it) {
        const Category c = parse_category(it.key());
        Entry& e = g.entries_[static_cast<std::size_t>(c)];
        e.display = it.value().at("display").get<std::string>();
        e.nouns = it.value().at("nouns").get<std::vector<std::string>>();
        e.fused = it.value().value("fused", std::vector<std::string>{});
        g.present_.insert(c);
      }
      g.verbs_ = j.at("verbs").get<std::vector<std::string>>();
      g.noun_templates_ = j.at("noun_templates").get<std::vector<std::string>>();
      g.fused_templates_ = j.value("fused_templates", std::vector<std::string>{});
      g.fixed_prefix_ = j.at("fixed_prefix").get<std::string>();
      for (const auto& w : j.at("function_words").get<std::vector<std::string>>()) g.function_words_.insert(w);
      for (const auto& m : j.value("modifiers", std::vector<std::string>{}))
        for (auto& t : tokenize(m)) g.modifier_words_.insert(t);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("grammar: ") + e.what());
    }
    g.index();
    return g;
  }

  static PromptGrammar load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grammar file " + path);
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError("grammar " + path + ": " + e.what());
    }
  }

  /// Grammar shipped with the library. PRISM_GRAMMAR overrides the compiled-in path.
  static const PromptGrammar& builtin() {
    static const PromptGrammar g = [] {
      if (const char* p = std::getenv("PRISM_GRAMMAR")) return load(p);
#ifdef PRISM_GRAMMAR_PATH
      return load(PRISM_GRAMMAR_PATH);
#else
      throw IoError("no grammar path configured; set PRISM_GRAMMAR");
#endif
    }();
    return g;
  }

  const Entry& entry(Category c) const { return entries_[static_cast<std::size_t>(c)]; }
  const std::vector<std::string>& verbs() const noexcept { return verbs_; }
  const std::vector<std::string>& noun_templates() const noexcept { return noun_templates_; }
  const std::vector<std::string>& fused_templates() const noexcept { return fused_templates_; }
  const std::string& fixed_prefix() const noexcept { return fixed_prefix_; }

  /// All surface forms (nouns and fused verbs) of a category.
  std::vector<std::string> surface_forms(Category c) const {
    auto out = entry(c).nouns;
    out.insert(out.end(), entry(c).fused.begin(), entry(c).fused.end());
    return out;
  }

  ParsedPrompt parse(std::string_view text) const {
    ParsedPrompt p;
    p.tokens = tokenize(text);
    if (p.tokens.empty()) throw InvalidArgument("empty prompt");
    const auto& t = p.tokens;
    std::size_t i = 0;
    while (i < t.size()) {
      bool matched = false;
      for (std::size_t len = std::min(max_phrase_, t.size() - i); len >= 1; --len) {
        const std::vector<std::string> key(t.begin() + static_cast<long>(i), t.begin() + static_cast<long>(i + len));
        if (auto it = phrases_.find(key); it != phrases_.end()) {
          p.spans.push_back({i, i + len, it->second});
          p.targets.insert(it->second);
          i += len;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (!function_words_.contains(t[i])) {
          p.unmatched_tokens.push_back(t[i]);
          if (modifier_words_.contains(t[i])) p.modifiers.push_back(t[i]);
        }
        ++i;
      }
    }
    if (p.targets.empty()) throw NoTargetsError(p.unmatched_tokens);
    return p;
  }

  std::string render(const LabelSet& targets, PromptStyle style, SeededRng& rng) const {
    detail::require(!targets.empty(), "render_prompt: empty target set");
    auto cats = targets.members();
    if (style == PromptStyle::fixed) {
      std::vector<std::string> items;
      for (Category c : cats) items.push_back(entry(c).display);
      return fixed_prefix_ + " " + join_list(items, true);
    }
    rng.shuffle(cats);
    const bool can_fuse = !fused_templates_.empty() &&
                          std::all_of(cats.begin(), cats.end(), [&](Category c) { return !entry(c).fused.empty(); });
    const bool fused = can_fuse && rng.coin(0.5);
    std::vector<std::string> items;
    for (Category c : cats) {
      const auto& pool = fused ? entry(c).fused : entry(c).nouns;
      items.push_back(pool[rng.index(pool.size())]);
    }
    const bool oxford = rng.coin(0.5);
    const auto& templates = fused ? fused_templates_ : noun_templates_;
    std::string out = templates[rng.index(templates.size())];
    replace(out, "{list}", join_list(items, oxford));
    if (out.find("{verb}") != std::string::npos) replace(out, "{verb}", verbs_[rng.index(verbs_.size())]);
    return out;
  }

  /// "a", "a and b", "a, b, and c" (or "a, b and c" without the serial comma).
  static std::string join_list(const std::vector<std::string>& items, bool oxford) {
    if (items.size() == 1) return items[0];
    if (items.size() == 2) return items[0] + " and " + items[1];
    std::string s;
    for (std::size_t i = 0; i + 1 < items.size(); ++i) s += items[i] + (i + 2 < items.size() ? ", " : "");
    return s + (oxford ? ", and " : " and ") + items.back();
  }

 private:
  PromptGrammar() = default;

  static void replace(std::string& s, std::string_view key, const std::string& value) {
    const auto pos = s.find(key);
    if (pos != std::string::npos) s.replace(pos, key.size(), value);
  }

  void index() {
    for (Category c : all_categories()) {
      if (!present_.contains(c)) throw ParseError("grammar: missing category " + std::string(name(c)));
      const auto forms = surface_forms(c);
      if (forms.size() < 3) throw ParseError("grammar: fewer than 3 surface forms for " + std::string(name(c)));
      for (const auto& f : forms) add_phrase(f, c);
      for (const auto& f : entry(c).fused)
        if (tokenize(f).size() != 1) throw ParseError("grammar: fused form '" + f + "' must be a single token");
    }
    for (const auto& v : verbs_)
      for (auto& t : tokenize(v)) function_words_.insert(t);
    for (Category c : all_categories()) {
      const auto tok = tokenize(entry(c).display);
      auto it = phrases_.find(tok);
      if (it == phrases_.end() || it->second != c)
        throw ParseError("grammar: display name '" + entry(c).display + "' does not parse to its category");
    }
    if (verbs_.empty() || noun_templates_.empty()) throw ParseError("grammar: needs verbs and noun templates");
  }

  void add_phrase(const std::string& form, Category c) {
    auto tok = tokenize(form);
    if (tok.empty()) throw ParseError("grammar: empty surface form for " + std::string(name(c)));
    auto [it, inserted] = phrases_.emplace(tok, c);
    if (!inserted && it->second != c)
      throw ParseError("grammar: surface form '" + form + "' claimed by both " + std::string(name(it->second)) +
                       " and " + std::string(name(c)));
    max_phrase_ = std::max(max_phrase_, tok.size());
  }

  std::array<Entry, kNumCategories> entries_{};
  std::set<Category> present_;
  std::vector<std::string> verbs_;
  std::vector<std::string> noun_templates_;
  std::vector<std::string> fused_templates_;
  std::string fixed_prefix_;
  std::set<std::string, std::less<>> function_words_;
  std::set<std::string, std::less<>> modifier_words_;
  std::map<std::vector<std::string>, Category> phrases_;
  std::size_t max_phrase_ = 1;
};

inline std::string render_prompt(const LabelSet& targets, PromptStyle style, SeededRng& rng) {
  return PromptGrammar::builtin().render(targets, style, rng);
}

inline std::string render_prompt(const LabelSet& targets) {
  SeededRng unused(0);
  return PromptGrammar::builtin().render(targets, PromptStyle::fixed, unused);
}

inline ParsedPrompt parse_prompt(std::string_view text) { return PromptGrammar::builtin().parse(text); }

}  // namespace prism

#endif
