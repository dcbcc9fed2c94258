#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <unistd.h>

#include "prism/dataset/builder.hpp"
#include "prism/dataset/manifest.hpp"
#include "prism/dataset/scenes.hpp"

namespace prism {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("prism_dataset_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Scenes, CheckerHasExactlyTwoColors) {
  SeededRng rng(1);
  for (int t = 0; t < 10; ++t) {
    auto [img, depth] = generate_clean(32, SceneKind::checker, rng);
    std::set<std::array<double, 3>> colors;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) colors.insert({img(y, x, 0), img(y, x, 1), img(y, x, 2)});
    EXPECT_EQ(colors.size(), 2u);
  }
}

TEST(Scenes, GradientRowMeansMonotone) {
  SeededRng rng(2);
  for (int t = 0; t < 20; ++t) {
    auto [img, depth] = generate_clean(48, SceneKind::gradient, rng);
    std::vector<double> means;
    for (int y = 0; y < 48; ++y) {
      double s = 0;
      for (int x = 0; x < 48; ++x) s += luminance(img, y, x);
      means.push_back(s / 48);
    }
    const bool up = means.back() >= means.front();
    for (int y = 1; y < 48; ++y) {
      if (up)
        EXPECT_GE(means[y], means[y - 1] - 1e-9);
      else
        EXPECT_LE(means[y], means[y - 1] + 1e-9);
    }
  }
}

TEST(Scenes, SharedTonalAndColorStatistics) {
  SeededRng rng(4);
  for (auto kind : {SceneKind::gradient, SceneKind::shapes, SceneKind::texture}) {
    for (int t = 0; t < 5; ++t) {
      auto [img, depth] = generate_clean(64, kind, rng);
      std::vector<double> luma;
      std::array<double, 3> m{};
      for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
          luma.push_back(luminance(img, y, x));
          for (int c = 0; c < 3; ++c) m[c] += img(y, x, c) / 4096.0;
        }
      std::sort(luma.begin(), luma.end());
      EXPECT_NEAR(luma[40], 0.05, 1e-9) << name(kind);
      EXPECT_NEAR(luma[4095 - 40], 0.95, 1e-9) << name(kind);
      EXPECT_NEAR(m[0], m[1], 0.05) << name(kind);
      EXPECT_NEAR(m[1], m[2], 0.05) << name(kind);
    }
  }
}

TEST(Scenes, DeterministicAndInRange) {
  for (auto kind : {SceneKind::gradient, SceneKind::shapes, SceneKind::texture, SceneKind::checker}) {
    SeededRng a(9), b(9);
    auto [ia, da] = generate_clean(32, kind, a);
    auto [ib, db] = generate_clean(32, kind, b);
    EXPECT_EQ(ia, ib) << name(kind);
    EXPECT_EQ(da, db);
    EXPECT_TRUE(da.matches(ia));
    for (double v : ia.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Scenes, DepthFarAtTop) {
  SeededRng rng(3);
  auto [img, d] = generate_clean(32, SceneKind::shapes, rng);
  double top = 0, bottom = 0;
  for (int x = 0; x < 32; ++x) {
    top += d(0, x);
    bottom += d(31, x);
  }
  EXPECT_GT(top, bottom);
}

TEST(Scenes, TooSmallRejected) {
  SeededRng rng(1);
  EXPECT_THROW(generate_clean(15, SceneKind::gradient, rng), InvalidArgument);
}

TEST(Split, ExactCountsPerHundred) {
  std::array<int, 3> counts{};
  for (std::uint64_t id = 0; id < 1000; ++id) ++counts[static_cast<int>(assign_split(id, {0.8, 0.19, 0.01}))];
  EXPECT_EQ(counts, (std::array<int, 3>{800, 190, 10}));
}

TEST(Split, PureFunctionOfIdAndFractions) {
  for (std::uint64_t id = 0; id < 500; ++id)
    EXPECT_EQ(assign_split(id, {0.8, 0.19, 0.01}), assign_split(id, {0.8, 0.19, 0.01}));
  std::array<int, 3> counts{};
  for (std::uint64_t id = 0; id < 300; ++id) ++counts[static_cast<int>(assign_split(id, {0.5, 0.25, 0.25}))];
  EXPECT_EQ(counts, (std::array<int, 3>{150, 75, 75}));
}

TEST(Eligibility, MatchesHandCount) {
  using K = DistortionKind;
  // {overexposure, underexposure, haze}: pairs spanning two categories are 2 of 3.
  const std::vector<K> pool = {K::overexposure, K::underexposure, K::haze};
  EXPECT_NEAR(eligible_probability(pool, {0.0, 1.0}), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(eligible_probability(pool, {1.0, 0.0}), 0.0, 1e-12);
  EXPECT_NEAR(eligible_probability(pool, {0.0, 0.0, 1.0}), 1.0, 1e-12);
  // Full pool, N = 2: 3 same-category pairs out of C(17,2) = 136.
  EXPECT_NEAR(eligible_probability(all_kinds(), {0.0, 1.0}), 133.0 / 136.0, 1e-12);
}

TEST(Config, JsonRoundTripAndValidation) {
  DatasetConfig c;
  c.n_images = 17;
  c.n_max = 2;
  c.kinds = kinds_for({Category::haze, Category::brightness});
  const auto back = dataset_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.kinds.size(), 3u);

  auto bad = to_json(c);
  bad["mode_fractions"] = {0.7, 0.2, 0.2};
  EXPECT_THROW(dataset_config_from_json(bad), InvalidArgument);
  bad = to_json(c);
  bad["n_max"] = 0;
  EXPECT_THROW(dataset_config_from_json(bad), InvalidArgument);
  bad = to_json(c);
  bad["kinds"] = {"haze", "smog"};
  EXPECT_THROW(dataset_config_from_json(bad), ParseError);
}

TEST(Builder, ItemInvariants) {
  DatasetConfig c;
  c.n_images = 600;
  c.image_size = 24;
  const DatasetBuilder b(c);
  std::array<int, 3> modes{};
  b.for_each_item([&](GeneratedItem&& it) {
    const auto& t = it.triplet;
    ASSERT_GE(t.applied_specs.size(), 1u);
    ASSERT_LE(t.applied_specs.size(), 3u);
    auto kinds = t.applied_kinds();
    std::sort(kinds.begin(), kinds.end());
    EXPECT_EQ(std::adjacent_find(kinds.begin(), kinds.end()), kinds.end());
    EXPECT_EQ(t.applied_labels, kinds_to_labels(t.applied_kinds()));
    EXPECT_TRUE(satisfies_mode({t.target_labels, t.mode, t.prompt, {}}, t.applied_labels));
    EXPECT_EQ(parse_prompt(t.prompt).targets, t.target_labels) << t.prompt;
    EXPECT_EQ(it.distorted, apply_chain(t.applied_specs, it.clean, &it.depth));
    EXPECT_EQ(t.clean_id, t.id / 4);
    ++modes[static_cast<int>(t.mode)];
  });
  EXPECT_GT(modes[1], 0);
  EXPECT_GT(modes[2], 0);
}

TEST(Builder, SharedCleanAcrossVariants) {
  DatasetConfig c;
  c.n_images = 8;
  c.image_size = 16;
  const DatasetBuilder b(c);
  EXPECT_EQ(b.make_item(0).clean, b.make_item(3).clean);
  EXPECT_NE(b.make_item(0).clean, b.make_item(4).clean);
  EXPECT_EQ(b.make_item(5).triplet, b.make_item(5).triplet);
}

TEST(Builder, SingleKindPoolNeverPartial) {
  DatasetConfig c;
  c.n_images = 200;
  c.n_max = 1;
  c.image_size = 16;
  for (const auto& t : DatasetBuilder(c).triplets()) EXPECT_NE(t.mode, PromptMode::partial);
}

TEST(Builder, WritesDeterministicArtifacts) {
  DatasetConfig c;
  c.n_images = 30;
  c.image_size = 16;
  const auto a = temp_dir("a"), b = temp_dir("b");
  const auto rows = DatasetBuilder(c).build(a);
  DatasetBuilder(c).build(b);
  EXPECT_EQ(slurp(a / "manifest.jsonl"), slurp(b / "manifest.jsonl"));
  for (const auto& t : rows) {
    EXPECT_EQ(slurp(a / t.distorted_path), slurp(b / t.distorted_path));
    EXPECT_TRUE(fs::exists(a / t.clean_path));
    EXPECT_TRUE(fs::exists(a / *t.depth_path));
  }
  EXPECT_EQ(read_manifest(a / "manifest.jsonl"), rows);
  const auto cfg = dataset_config_from_json(nlohmann::json::parse(slurp(a / "config.json")));
  EXPECT_EQ(to_json(cfg), to_json(c));
  const auto item = load_item(a, rows[3]);
  EXPECT_EQ(item.clean, quantize8(DatasetBuilder(c).make_item(3).clean));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Builder, ThreadCountDoesNotChangeOutput) {
  DatasetConfig c;
  c.n_images = 24;
  c.image_size = 16;
  const auto a = temp_dir("t1"), b = temp_dir("t4");
  ::setenv("PRISM_FORGE_THREADS", "1", 1);
  DatasetBuilder(c).build(a);
  ::setenv("PRISM_FORGE_THREADS", "4", 1);
  DatasetBuilder(c).build(b);
  ::unsetenv("PRISM_FORGE_THREADS");
  EXPECT_EQ(slurp(a / "manifest.jsonl"), slurp(b / "manifest.jsonl"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Builder, IngestsImageDirectory) {
  const auto src = temp_dir("src");
  write_image(Image(20, 30, 3, 0.3), src / "a.png");
  write_image(Image(40, 40, 1, 0.6), src / "b.pgm");
  DatasetConfig c;
  c.n_images = 8;
  c.image_size = 16;
  c.clean_dir = src.string();
  const DatasetBuilder b(c);
  const auto it = b.make_item(0);
  EXPECT_EQ(it.clean.height(), 16);
  EXPECT_EQ(it.clean.channels(), 3);
  EXPECT_NEAR(it.clean(8, 8, 0), 0.3, 0.01);
  EXPECT_NEAR(b.make_item(4).clean(8, 8, 1), 0.6, 0.01);
  fs::remove_all(src);
}

TEST(Manifest, EmptyFileGivesEmptyList) {
  const auto d = temp_dir("empty");
  std::ofstream(d / "m.jsonl").close();
  EXPECT_TRUE(read_manifest(d / "m.jsonl").empty());
  fs::remove_all(d);
}

TEST(Manifest, RoundTripHundredRecords) {
  DatasetConfig c;
  c.n_images = 100;
  c.image_size = 16;
  const auto rows = DatasetBuilder(c).triplets();
  const auto d = temp_dir("rt");
  write_manifest(rows, d / "m.jsonl");
  EXPECT_EQ(read_manifest(d / "m.jsonl"), rows);
  fs::remove_all(d);
}

TEST(Manifest, ErrorsCarryLineNumberAndTag) {
  DatasetConfig c;
  c.n_images = 3;
  c.image_size = 16;
  const auto rows = DatasetBuilder(c).triplets();
  const auto d = temp_dir("bad");
  auto j = to_json(rows[1]);
  j["applied_specs"][0]["kind"] = "smog";
  {
    std::ofstream out(d / "m.jsonl");
    out << to_json(rows[0]).dump() << '\n' << j.dump() << '\n';
  }
  try {
    read_manifest(d / "m.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("smog"), std::string::npos);
  }
  {
    std::ofstream out(d / "m.jsonl");
    out << "{not json\n";
  }
  try {
    read_manifest(d / "m.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
  }
  auto wrong = to_json(rows[0]);
  wrong["applied_labels"] = {"snow"};
  EXPECT_THROW(triplet_from_json(wrong), ParseError);
  fs::remove_all(d);
}

}  // namespace
}  // namespace prism
