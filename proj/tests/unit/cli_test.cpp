#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "prism/core/image_io.hpp"
#include "prism/dataset/manifest.hpp"

namespace prism {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("prism_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write("ds.json",
          R"({"n_images": 120, "categories": ["low_light","brightness","contrast","color_shift","haze","gaussian_noise","defocus_blur","pixelation"]})");
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& p) const { return dir_ / p; }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  std::string read(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }

  /// Exit status of the CLI; stdout goes to out.txt.
  int run(const std::string& args, const std::string& stdin_text = "") const {
    std::string cmd = std::string(PRISM_CLI_PATH) + " " + args + " > " + path("out.txt").string() + " 2> " +
                      path("err.txt").string();
    if (!stdin_text.empty()) {
      write("in.txt", stdin_text);
      cmd += " < " + path("in.txt").string();
    }
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string out() const { return read(path("out.txt")); }

  fs::path dir_;
};

TEST_F(Cli, GenIsDeterministicAndSeedOverridesConfig) {
  const std::string cfg = path("ds.json").string();
  ASSERT_EQ(run("gen --config " + cfg + " --out " + path("a").string()), 0);
  const std::string first = out();
  ASSERT_EQ(run("gen --config " + cfg + " --out " + path("b").string() + " --seed 42"), 0);
  EXPECT_EQ(out(), std::string(first).replace(first.find(path("a").string()), path("a").string().size(),
                                              path("b").string()));
  EXPECT_EQ(read(path("a/manifest.jsonl")), read(path("b/manifest.jsonl")));
  ASSERT_EQ(run("gen --config " + cfg + " --out " + path("c").string() + " --seed 7"), 0);
  EXPECT_NE(read(path("a/manifest.jsonl")), read(path("c/manifest.jsonl")));
}

TEST_F(Cli, NegativePromptLeavesHazeImageUnchanged) {
  ASSERT_EQ(run("gen --config " + path("ds.json").string() + " --out " + path("d").string()), 0);
  const auto rows = read_manifest(path("d/manifest.jsonl"));
  const auto it = std::find_if(rows.begin(), rows.end(), [](const Triplet& t) {
    return t.applied_specs.size() == 1 && t.applied_specs[0].kind == DistortionKind::haze;
  });
  ASSERT_NE(it, rows.end());
  const std::string src = "--manifest " + path("d/manifest.jsonl").string() + " --id " + std::to_string(it->id);
  ASSERT_EQ(run("restore " + src + " --prompt \"remove snow\" --out " + path("r.png").string()), 0);
  EXPECT_EQ(read_image(path("r.png")), read_image(path("d") / it->distorted_path));
  const auto plan = nlohmann::json::parse(read(path("r.png.plan.json")));
  EXPECT_TRUE(plan.at("plan").at("steps").empty());

  ASSERT_EQ(run("restore " + src + " --prompt \"remove the haze\" --sequential --out " + path("h.png").string()), 0);
  const auto h = nlohmann::json::parse(read(path("h.png.plan.json")));
  ASSERT_EQ(h.at("plan").at("steps").size(), 1u);
  EXPECT_EQ(h.at("plan").at("steps")[0].at("category"), "haze");
  EXPECT_EQ(h.at("plan").at("mode"), "sequential");
}

TEST_F(Cli, DeclaredPresenceGovernsSelectivity) {
  Image img(16, 16, 3, 0.4);
  write_image(img, path("flat.png"));
  ASSERT_EQ(run("restore --in " + path("flat.png").string() + " --present haze --prompt \"remove snow\" --out " +
                path("o.png").string()),
            0);
  EXPECT_EQ(read_image(path("o.png")), read_image(path("flat.png")));
}

TEST_F(Cli, SessionWritesNumberedSteps) {
  ASSERT_EQ(run("gen --config " + path("ds.json").string() + " --out " + path("d").string()), 0);
  const std::string src = "--manifest " + path("d/manifest.jsonl").string() + " --id 0";
  ASSERT_EQ(run("session " + src + " --out " + path("s").string(), "remove noise\n\nfix coloring\nxyzzy\nquit\n"), 0);
  EXPECT_TRUE(fs::exists(path("s/step_001.png")));
  EXPECT_TRUE(fs::exists(path("s/step_002.png.plan.json")));
  EXPECT_FALSE(fs::exists(path("s/step_003.png")));
  EXPECT_NE(out().find("error: no recognizable distortion terms"), std::string::npos);
}

TEST_F(Cli, TTestReproducesFixture) {
  write("a.csv", "score\n0.50\n0.60\n0.70\n");
  write("b.csv", "score\n0.508\n0.606\n0.710\n");
  ASSERT_EQ(run("ttest --a " + path("a.csv").string() + " --b " + path("b.csv").string()), 0);
  const auto j = nlohmann::json::parse(out());
  EXPECT_NEAR(j.at("t").get<double>(), 6.9282, 1e-3);
  EXPECT_NEAR(j.at("p").get<double>(), 0.0202, 1e-3);
  write("c.csv", "0.6\n0.7\n0.8\n");
  EXPECT_EQ(run("ttest --a " + path("a.csv").string() + " --b " + path("c.csv").string()), 1);
}

TEST_F(Cli, UsageErrorsExitOneWithoutOutputs) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("gen --bogus"), 1);
  EXPECT_EQ(run("gen"), 1);
  EXPECT_EQ(run("train-encoder --manifest " + path("missing.jsonl").string() + " --out " + path("e").string()), 1);
  EXPECT_FALSE(fs::exists(path("e")));
  write("bad.json", "{\"n_max\": 0}");
  EXPECT_EQ(run("gen --config " + path("bad.json").string() + " --out " + path("g").string()), 1);
  EXPECT_FALSE(fs::exists(path("g")));
  Image img(16, 16, 3, 0.4);
  write_image(img, path("flat.png"));
  EXPECT_EQ(run("restore --in " + path("flat.png").string() + " --prompt \"xyzzy\" --out " + path("x.png").string()),
            1);
  EXPECT_FALSE(fs::exists(path("x.png")));
  EXPECT_EQ(run("restore --in " + path("flat.png").string() + " --out " + path("x.png").string()), 1);
  EXPECT_EQ(run("classify --in " + path("flat.png").string()), 1);
}

TEST_F(Cli, ClassifierPipelineRuns) {
  ASSERT_EQ(run("gen --config " + path("ds.json").string() + " --out " + path("d").string()), 0);
  const std::string m = "--manifest " + path("d/manifest.jsonl").string();
  ASSERT_EQ(run("train-encoder " + m + " --epochs 2 --out " + path("enc.ckpt").string()), 0);
  EXPECT_TRUE(fs::exists(path("enc.ckpt.log.csv")));
  ASSERT_EQ(run("train-classifier " + m + " --epochs 2 --encoder " + path("enc.ckpt").string() + " --out " +
                path("cls.ckpt").string()),
            0);
  const std::string det = " --encoder " + path("enc.ckpt").string() + " --classifier " + path("cls.ckpt").string();
  ASSERT_EQ(run("classify --in " + (path("d") / read_manifest(path("d/manifest.jsonl"))[0].distorted_path).string() +
                det),
            0);
  const auto j = nlohmann::json::parse(out());
  EXPECT_EQ(j.at("probabilities").size(), kNumCategories);
  ASSERT_EQ(run("eval " + m + " --split val" + det + " --out " + path("ev.json").string()), 0);
  const auto ev = nlohmann::json::parse(read(path("ev.json")));
  EXPECT_EQ(ev.at("negative_identity").at("rate"), 1.0);
}

}  // namespace
}  // namespace prism
