#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "prism/prompts/grammar.hpp"
#include "prism/prompts/request.hpp"

namespace prism {
namespace {

using C = Category;

const PromptGrammar& G() { return PromptGrammar::builtin(); }

LabelSet random_set(SeededRng& rng, std::size_t lo, std::size_t hi) {
  auto cats = all_categories();
  rng.shuffle(cats);
  const auto n = static_cast<std::size_t>(rng.uniform_int(static_cast<long>(lo), static_cast<long>(hi)));
  LabelSet s;
  for (std::size_t i = 0; i < n; ++i) s.insert(cats[i]);
  return s;
}

TEST(Tokenize, LowercasesAndKeepsHyphens) {
  EXPECT_EQ(tokenize("Please SUPER-RESOLVE this, OK?"),
            (std::vector<std::string>{"please", "super-resolve", "this", "ok"}));
  EXPECT_EQ(tokenize("  --  "), std::vector<std::string>{});
}

TEST(Render, FixedStyleHandStrings) {
  EXPECT_EQ(render_prompt(LabelSet{C::haze}), "remove the effects of haze");
  EXPECT_EQ(render_prompt(LabelSet{C::haze, C::defocus_blur}), "remove the effects of defocus blur and haze");
  EXPECT_EQ(render_prompt(LabelSet{C::haze, C::snow, C::low_light}),
            "remove the effects of low light, haze, and snow");
}

TEST(Render, EmptyTargetsRejected) {
  SeededRng rng(1);
  EXPECT_THROW(render_prompt(LabelSet{}, PromptStyle::varied, rng), InvalidArgument);
}

TEST(Render, FixedSingletonsRoundTrip) {
  for (C c : all_categories()) EXPECT_EQ(parse_prompt(render_prompt(LabelSet{c})).targets, LabelSet{c});
}

// Enumerates every string the varied style can produce for two categories,
// straight from the grammar data.
std::set<std::string> enumerate_pair(C a, C b) {
  std::set<std::string> out;
  const std::vector<std::pair<C, C>> orders = {{a, b}, {b, a}};
  auto fill = [](std::string t, const std::string& key, const std::string& v) {
    const auto p = t.find(key);
    if (p != std::string::npos) t.replace(p, key.size(), v);
    return t;
  };
  for (auto [x, y] : orders) {
    for (const auto& nx : G().entry(x).nouns)
      for (const auto& ny : G().entry(y).nouns)
        for (const auto& t : G().noun_templates())
          for (const auto& v : G().verbs()) out.insert(fill(fill(t, "{list}", nx + " and " + ny), "{verb}", v));
    for (const auto& fx : G().entry(x).fused)
      for (const auto& fy : G().entry(y).fused)
        for (const auto& t : G().fused_templates()) out.insert(fill(t, "{list}", fx + " and " + fy));
  }
  return out;
}

TEST(Render, VariedOutputIsAGrammarMember) {
  const auto all = enumerate_pair(C::haze, C::defocus_blur);
  EXPECT_TRUE(all.contains("dehaze and unblur this image"));
  SeededRng rng(42);
  std::set<std::string> seen;
  for (int i = 0; i < 500; ++i) {
    const auto s = G().render(LabelSet{C::haze, C::defocus_blur}, PromptStyle::varied, rng);
    EXPECT_TRUE(all.contains(s)) << s;
    seen.insert(s);
  }
  EXPECT_GT(seen.size(), 100u);
}

TEST(RoundTrip, ExhaustiveUpToThreeBothStyles) {
  const auto cats = all_categories();
  const auto n = cats.size();
  SeededRng rng(7);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      for (std::size_t k = j; k < n; ++k) {
        const LabelSet s{cats[i], cats[j], cats[k]};
        ASSERT_EQ(parse_prompt(G().render(s, PromptStyle::fixed, rng)).targets, s);
        for (int rep = 0; rep < 8; ++rep) {
          const auto text = G().render(s, PromptStyle::varied, rng);
          ASSERT_EQ(parse_prompt(text).targets, s) << text;
        }
      }
}

TEST(RoundTrip, RandomLargeSets) {
  SeededRng rng(8);
  for (int t = 0; t < 3000; ++t) {
    const auto s = random_set(rng, 1, kNumCategories);
    const auto style = rng.coin() ? PromptStyle::fixed : PromptStyle::varied;
    const auto text = G().render(s, style, rng);
    ASSERT_EQ(parse_prompt(text).targets, s) << text;
  }
}

TEST(Parse, HandExamples) {
  EXPECT_EQ(parse_prompt("dehaze this image").targets, LabelSet{C::haze});
  EXPECT_EQ(parse_prompt("remove haze and blur").targets, (LabelSet{C::haze, C::defocus_blur}));
  EXPECT_EQ(parse_prompt("remove motion blur").targets, LabelSet{C::motion_blur});
  EXPECT_EQ(parse_prompt("dehaze and super-resolve this").targets, (LabelSet{C::haze, C::pixelation}));
  EXPECT_EQ(parse_prompt("unwarp").targets, LabelSet{C::elastic_warp});
  EXPECT_EQ(parse_prompt("fix coloring").targets, LabelSet{C::color_shift});
  EXPECT_EQ(parse_prompt("DeHaze THIS").targets, LabelSet{C::haze});
}

TEST(Parse, MotionBigramWinsOverGenericBlur) {
  const auto p = parse_prompt("remove the motion blur and the blur");
  EXPECT_EQ(p.targets, (LabelSet{C::motion_blur, C::defocus_blur}));
  ASSERT_EQ(p.spans.size(), 2u);
  EXPECT_EQ(p.spans[0].end - p.spans[0].begin, 2u);
  EXPECT_EQ(p.mention_order(), (std::vector<C>{C::motion_blur, C::defocus_blur}));
}

TEST(Parse, NothingRecognizedCarriesUnmatched) {
  try {
    parse_prompt("make it prettier");
    FAIL();
  } catch (const NoTargetsError& e) {
    EXPECT_EQ(e.unmatched(), (std::vector<std::string>{"make", "prettier"}));
  }
  EXPECT_THROW(parse_prompt("   "), InvalidArgument);
}

TEST(Parse, ModifiersSurfaceAsMetadata) {
  const auto p = parse_prompt("slightly reduce the haze in the sky");
  EXPECT_EQ(p.targets, LabelSet{C::haze});
  EXPECT_EQ(p.modifiers, (std::vector<std::string>{"slightly", "sky"}));
  EXPECT_EQ(p.unmatched_tokens, (std::vector<std::string>{"slightly", "sky"}));
}

TEST(Parse, SpansAreSoundAndDisjoint) {
  std::vector<std::string> vocab = {"the", "please", "blur", "motion", "low", "light", "fog", "xyz", "and",
                                    "noise", "cloud", "cover", "snow", "water", "droplets", "ripple", "colour"};
  for (C c : all_categories())
    for (const auto& f : G().surface_forms(c)) vocab.push_back(f);
  SeededRng rng(11);
  for (int t = 0; t < 3000; ++t) {
    std::string text;
    const auto n = rng.uniform_int(1, 8);
    for (int i = 0; i < n; ++i) text += vocab[rng.index(vocab.size())] + " ";
    ParsedPrompt p;
    try {
      p = parse_prompt(text);
    } catch (const NoTargetsError&) {
      continue;
    }
    LabelSet u;
    std::size_t prev_end = 0;
    for (const auto& s : p.spans) {
      EXPECT_GE(s.begin, prev_end);
      prev_end = s.end;
      std::string phrase;
      for (auto k = s.begin; k < s.end; ++k) phrase += (k > s.begin ? " " : "") + p.tokens[k];
      const auto forms = G().surface_forms(s.category);
      bool found = false;
      for (const auto& f : forms) {
        std::string norm;
        for (const auto& tk : tokenize(f)) norm += (norm.empty() ? "" : " ") + tk;
        found |= norm == phrase;
      }
      EXPECT_TRUE(found) << phrase;
      u.insert(s.category);
    }
    EXPECT_EQ(u, p.targets);
  }
}

TEST(Grammar, EveryCategoryHasThreeForms) {
  for (C c : all_categories()) EXPECT_GE(G().surface_forms(c).size(), 3u) << name(c);
}

nlohmann::json minimal_grammar() {
  nlohmann::json j;
  for (C c : all_categories()) {
    const std::string key(name(c));
    std::string n = key;
    std::replace(n.begin(), n.end(), '_', '-');
    j["categories"][key] = {{"display", n}, {"nouns", {n, n + " a", n + " b"}}, {"fused", {"de" + n}}};
  }
  j["verbs"] = {"remove"};
  j["noun_templates"] = {"{verb} {list}"};
  j["fixed_prefix"] = "remove";
  j["function_words"] = {"the"};
  return j;
}

TEST(Grammar, RejectsAmbiguousAndIncompleteFiles) {
  EXPECT_NO_THROW(PromptGrammar::from_json(minimal_grammar()));
  auto dup = minimal_grammar();
  dup["categories"]["snow"]["fused"].push_back("dehaze");
  EXPECT_THROW(PromptGrammar::from_json(dup), ParseError);
  auto missing = minimal_grammar();
  missing["categories"].erase("rain");
  EXPECT_THROW(PromptGrammar::from_json(missing), ParseError);
  auto thin = minimal_grammar();
  thin["categories"]["rain"]["nouns"] = {"rain"};
  thin["categories"]["rain"]["fused"] = nlohmann::json::array();
  EXPECT_THROW(PromptGrammar::from_json(thin), ParseError);
  auto unknown = minimal_grammar();
  unknown["categories"]["smog"] = unknown["categories"]["haze"];
  EXPECT_THROW(PromptGrammar::from_json(unknown), ParseError);
}

TEST(Partial, TwoElementSetGivesSingletons) {
  SeededRng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto r = make_partial(LabelSet{C::haze, C::rain}, rng);
    EXPECT_TRUE(r.targets == LabelSet{C::haze} || r.targets == LabelSet{C::rain});
    EXPECT_EQ(r.mode, PromptMode::partial);
  }
}

TEST(Partial, UniformOverSixSubsets) {
  SeededRng rng(42);
  const LabelSet applied{C::haze, C::rain, C::snow};
  std::map<std::uint64_t, int> counts;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[make_partial(applied, rng).targets.bits()];
  EXPECT_EQ(counts.size(), 6u);
  for (const auto& [bits, n] : counts) {
    EXPECT_TRUE(LabelSet::from_bits(bits).subset_of(applied));
    EXPECT_NEAR(static_cast<double>(n) / draws, 1.0 / 6.0, 0.02);
  }
}

TEST(Partial, SingletonRejected) {
  SeededRng rng(1);
  EXPECT_THROW(make_partial(LabelSet{C::haze}, rng), InvalidArgument);
}

TEST(Negative, DisjointAndForced) {
  SeededRng rng(4);
  const auto r = make_negative(LabelSet{C::haze, C::defocus_blur}, rng);
  EXPECT_TRUE(r.targets.disjoint(LabelSet{C::haze, C::defocus_blur}));
  EXPECT_FALSE(r.targets.empty());

  LabelSet most = LabelSet::all();
  most.erase(C::clouds);
  EXPECT_EQ(make_negative(most, rng).targets, LabelSet{C::clouds});
  EXPECT_THROW(make_negative(LabelSet::all(), rng), InvalidArgument);
}

TEST(Negative, NeverContainsApplied) {
  SeededRng rng(5);
  for (int i = 0; i < 100000; ++i) ASSERT_FALSE(make_negative(LabelSet{C::haze}, rng).targets.contains(C::haze));
}

TEST(Requests, ModeInvariantsFuzz) {
  SeededRng rng(12);
  for (int t = 0; t < 3000; ++t) {
    const auto applied = random_set(rng, 1, 4);
    const auto style = rng.coin() ? PromptStyle::fixed : PromptStyle::varied;
    std::vector<RestorationRequest> reqs = {make_full(applied, rng, style), make_negative(applied, rng, style)};
    if (applied.size() >= 2) reqs.push_back(make_partial(applied, rng, style));
    for (const auto& r : reqs) {
      EXPECT_TRUE(satisfies_mode(r, applied)) << r.surface_text;
      EXPECT_EQ(request_from_prompt(r.surface_text, applied).mode, r.mode) << r.surface_text;
      EXPECT_EQ(r.order.size(), r.targets.size());
    }
  }
}

}  // namespace
}  // namespace prism
