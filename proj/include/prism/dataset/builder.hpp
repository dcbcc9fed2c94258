#ifndef PRISM_DATASET_BUILDER_HPP
#define PRISM_DATASET_BUILDER_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "prism/core/image_io.hpp"
#include "prism/core/resize.hpp"
#include "prism/dataset/manifest.hpp"
#include "prism/dataset/scenes.hpp"
#include "prism/distortions/apply.hpp"
#include "prism/prompts/request.hpp"

namespace prism {

struct DatasetConfig {
  std::size_t n_images = 1000;  // number of triplets
  int n_max = 3;
  std::vector<double> n_distribution;  // P(N = 1..n_max); empty means uniform
  std::array<double, 3> mode_fractions{0.70, 0.20, 0.10};    // full, partial, negative
  std::array<double, 3> split_fractions{0.80, 0.19, 0.01};   // train, val, test
  PromptStyle prompt_style = PromptStyle::varied;
  int image_size = 64;
  std::uint64_t global_seed = 42;
  int variants_per_clean = 4;
  std::vector<DistortionKind> kinds;  // empty means all 17
  std::vector<SceneKind> scenes;      // empty means all procedural scenes
  std::optional<std::string> clean_dir;

  std::vector<double> n_probs() const {
    if (!n_distribution.empty()) return n_distribution;
    return std::vector<double>(static_cast<std::size_t>(n_max), 1.0 / n_max);
  }

  std::vector<DistortionKind> kind_pool() const { return kinds.empty() ? all_kinds() : kinds; }

  std::vector<SceneKind> scene_pool() const {
    return scenes.empty() ? std::vector<SceneKind>{SceneKind::gradient, SceneKind::shapes, SceneKind::texture,
                                                   SceneKind::checker}
                          : scenes;
  }

  void validate() const {
    auto sums_to_one = [](auto first, auto last) {
      return std::abs(std::accumulate(first, last, 0.0) - 1.0) <= 1e-9 &&
             std::all_of(first, last, [](double v) { return v >= 0.0; });
    };
    detail::require(n_max >= 1, "config: n_max must be >= 1");
    detail::require(image_size >= 16, "config: image_size must be >= 16");
    detail::require(variants_per_clean >= 1, "config: variants_per_clean must be >= 1");
    detail::require(sums_to_one(mode_fractions.begin(), mode_fractions.end()), "config: mode_fractions must sum to 1");
    detail::require(sums_to_one(split_fractions.begin(), split_fractions.end()),
                    "config: split_fractions must sum to 1");
    const auto np = n_probs();
    detail::require(np.size() == static_cast<std::size_t>(n_max), "config: n_distribution needs n_max entries");
    detail::require(sums_to_one(np.begin(), np.end()), "config: n_distribution must sum to 1");
    auto pool = kind_pool();
    std::sort(pool.begin(), pool.end());
    detail::require(std::adjacent_find(pool.begin(), pool.end()) == pool.end(), "config: duplicate kinds");
    detail::require(pool.size() >= static_cast<std::size_t>(n_max), "config: fewer kinds than n_max");
  }
};

inline nlohmann::json to_json(const DatasetConfig& c) {
  nlohmann::json kinds = nlohmann::json::array(), scenes = nlohmann::json::array();
  for (auto k : c.kind_pool()) kinds.push_back(name(k));
  for (auto s : c.scene_pool()) scenes.push_back(name(s));
  nlohmann::json j = {{"n_images", c.n_images},
                      {"n_max", c.n_max},
                      {"n_distribution", c.n_probs()},
                      {"mode_fractions", c.mode_fractions},
                      {"split_fractions", c.split_fractions},
                      {"prompt_style", name(c.prompt_style)},
                      {"image_size", c.image_size},
                      {"global_seed", c.global_seed},
                      {"variants_per_clean", c.variants_per_clean},
                      {"kinds", kinds},
                      {"scenes", scenes}};
  if (c.clean_dir) j["clean_dir"] = *c.clean_dir;
  return j;
}

/// Missing keys keep their defaults. "categories" is shorthand for every kind in those categories.
inline DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  DatasetConfig c;
  try {
    c.n_images = j.value("n_images", c.n_images);
    c.n_max = j.value("n_max", c.n_max);
    c.n_distribution = j.value("n_distribution", c.n_distribution);
    c.mode_fractions = j.value("mode_fractions", c.mode_fractions);
    c.split_fractions = j.value("split_fractions", c.split_fractions);
    if (j.contains("prompt_style")) c.prompt_style = parse_prompt_style(j.at("prompt_style").get<std::string>());
    c.image_size = j.value("image_size", c.image_size);
    c.global_seed = j.value("global_seed", c.global_seed);
    c.variants_per_clean = j.value("variants_per_clean", c.variants_per_clean);
    if (j.contains("kinds"))
      for (const auto& k : j.at("kinds")) c.kinds.push_back(parse_kind(k.get<std::string>()));
    if (j.contains("categories")) {
      const Grouping g;
      for (const auto& n : j.at("categories"))
        for (auto k : g.kinds_of(parse_category(n.get<std::string>())))
          if (std::find(c.kinds.begin(), c.kinds.end(), k) == c.kinds.end()) c.kinds.push_back(k);
    }
    if (j.contains("scenes"))
      for (const auto& s : j.at("scenes")) c.scenes.push_back(parse_scene(s.get<std::string>()));
    if (j.contains("clean_dir")) c.clean_dir = j.at("clean_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset config: ") + e.what());
  }
  c.validate();
  return c;
}

/// Every kind belonging to the given categories under the default grouping.
inline std::vector<DistortionKind> kinds_for(const std::vector<Category>& cats) {
  std::vector<DistortionKind> out;
  const Grouping g;
  for (auto k : all_kinds())
    if (std::find(cats.begin(), cats.end(), g.category(k)) != cats.end()) out.push_back(k);
  return out;
}

/// Split membership depends only on (id, fractions). Ids are dealt in blocks of
/// 100; each block gets a fixed pseudo-random permutation and the largest-remainder
/// integer counts of the fractions, so every full block matches them exactly.
inline Split assign_split(std::uint64_t id, const std::array<double, 3>& fractions) {
  constexpr int kBlock = 100;
  std::array<int, 3> counts{};
  std::array<double, 3> rem{};
  int used = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = fractions[i] * kBlock;
    counts[i] = static_cast<int>(std::floor(exact + 1e-9));
    rem[i] = exact - counts[i];
    used += counts[i];
  }
  for (; used < kBlock; ++used) {
    const auto i = static_cast<std::size_t>(std::max_element(rem.begin(), rem.end()) - rem.begin());
    ++counts[i];
    rem[i] = -1.0;
  }
  std::vector<int> perm(kBlock);
  std::iota(perm.begin(), perm.end(), 0);
  SeededRng rng(mix64(id / kBlock ^ 0x51a5eedULL));
  rng.shuffle(perm);
  const int pos = perm[id % kBlock];
  if (pos < counts[0]) return Split::train;
  if (pos < counts[0] + counts[1]) return Split::val;
  return Split::test;
}

/// Probability that N kinds drawn without replacement from `pool` span at least
/// two categories, with N distributed as `n_probs` (index 0 is N = 1).
inline double eligible_probability(const std::vector<DistortionKind>& pool, const std::vector<double>& n_probs) {
  const Grouping g;
  double total = 0.0;
  for (std::size_t ni = 0; ni < n_probs.size(); ++ni) {
    const std::size_t n = ni + 1;
    if (n_probs[ni] == 0.0 || n > pool.size()) continue;
    std::size_t hits = 0, all = 0;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      LabelSet s;
      for (auto i : idx) s.insert(g.category(pool[i]));
      ++all;
      hits += s.size() >= 2;
      std::size_t k = n;
      while (k > 0 && idx[k - 1] == pool.size() - n + k - 1) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t m = k; m < n; ++m) idx[m] = idx[m - 1] + 1;
    }
    total += n_probs[ni] * static_cast<double>(hits) / static_cast<double>(all);
  }
  return total;
}

struct GeneratedItem {
  Image clean;
  DepthMap depth;
  Image distorted;
  Triplet triplet;
};

inline std::string numbered(const char* dir, std::uint64_t n, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/%06llu%s", dir, static_cast<unsigned long long>(n), ext);
  return buf;
}

inline std::size_t forge_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PRISM_FORGE_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

class DatasetBuilder {
 public:
  explicit DatasetBuilder(DatasetConfig config) : cfg_(std::move(config)) {
    cfg_.validate();
    pool_ = cfg_.kind_pool();
    n_probs_ = cfg_.n_probs();
    const double elig = eligible_probability(pool_, n_probs_);
    const double non_negative = 1.0 - cfg_.mode_fractions[2];
    partial_given_eligible_ =
        elig > 0 && non_negative > 0 ? std::min(1.0, cfg_.mode_fractions[1] / (non_negative * elig)) : 0.0;
    if (cfg_.clean_dir) load_clean_list();
  }

  const DatasetConfig& config() const noexcept { return cfg_; }

  std::uint64_t clean_id_of(std::uint64_t id) const noexcept {
    return id / static_cast<std::uint64_t>(cfg_.variants_per_clean);
  }

  std::pair<Image, DepthMap> make_clean(std::uint64_t clean_id) const {
    SeededRng rng(child_seed(cfg_.global_seed ^ kCleanSalt, clean_id));
    if (!clean_files_.empty()) {
      Image img = square_resize(read_image(clean_files_[clean_id % clean_files_.size()]), cfg_.image_size);
      return {std::move(img), synth_depth(cfg_.image_size, cfg_.image_size, rng)};
    }
    const auto scenes = cfg_.scene_pool();
    return generate_clean(cfg_.image_size, scenes[rng.index(scenes.size())], rng);
  }

  /// Everything except the clean image, which is shared across a clean group.
  GeneratedItem make_variant(std::uint64_t id, const Image& clean, const DepthMap& depth) const {
    GeneratedItem item{clean, depth, {}, {}};
    Triplet& t = item.triplet;
    t.id = id;
    t.clean_id = clean_id_of(id);
    t.seed = child_seed(cfg_.global_seed, id);
    SeededRng rng(t.seed);

    const std::size_t n = sample_count(rng);
    auto kinds = pool_;
    rng.shuffle(kinds);
    kinds.resize(n);
    for (auto k : kinds) t.applied_specs.push_back(sample_spec(k, rng, true));
    item.distorted = apply_chain(t.applied_specs, clean, &depth);
    t.applied_labels = kinds_to_labels(kinds);

    const RestorationRequest req = sample_request(t.applied_labels, rng);
    t.prompt = req.surface_text;
    t.target_labels = req.targets;
    t.mode = req.mode;
    t.split = assign_split(id, cfg_.split_fractions);
    t.clean_path = numbered("clean", t.clean_id, ".png");
    t.depth_path = numbered("depth", t.clean_id, ".pgm");
    t.distorted_path = numbered("distorted", id, ".png");
    return item;
  }

  GeneratedItem make_item(std::uint64_t id) const {
    auto [clean, depth] = make_clean(clean_id_of(id));
    return make_variant(id, clean, depth);
  }

  /// In-memory generation of ids [0, n_images), grouped by clean image.
  template <class Fn>
  void for_each_item(Fn&& fn) const {
    const auto vpc = static_cast<std::uint64_t>(cfg_.variants_per_clean);
    for (std::uint64_t g = 0; g * vpc < cfg_.n_images; ++g) {
      auto [clean, depth] = make_clean(g);
      for (std::uint64_t id = g * vpc; id < std::min<std::uint64_t>((g + 1) * vpc, cfg_.n_images); ++id)
        fn(make_variant(id, clean, depth));
    }
  }

  std::vector<Triplet> triplets() const {
    std::vector<Triplet> out;
    out.reserve(cfg_.n_images);
    for_each_item([&](GeneratedItem&& it) { out.push_back(std::move(it.triplet)); });
    return out;
  }

  /// Writes images, manifest.jsonl and config.json under `out_dir`.
  std::vector<Triplet> build(const std::filesystem::path& out_dir) const {
    namespace fs = std::filesystem;
    for (const char* sub : {"clean", "depth", "distorted"}) fs::create_directories(out_dir / sub);
    {
      std::ofstream cfg(out_dir / "config.json", std::ios::binary);
      if (!cfg) throw IoError("cannot write " + (out_dir / "config.json").string());
      cfg << to_json(cfg_).dump(2) << '\n';
    }
    const auto vpc = static_cast<std::uint64_t>(cfg_.variants_per_clean);
    const std::uint64_t groups = (cfg_.n_images + vpc - 1) / vpc;
    std::vector<Triplet> rows(cfg_.n_images);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
      try {
        for (std::uint64_t g = next++; g < groups; g = next++) {
          auto [clean, depth] = make_clean(g);
          write_image(clean, out_dir / numbered("clean", g, ".png"));
          write_depth(depth, out_dir / numbered("depth", g, ".pgm"));
          for (std::uint64_t id = g * vpc; id < std::min<std::uint64_t>((g + 1) * vpc, cfg_.n_images); ++id) {
            auto item = make_variant(id, clean, depth);
            write_image(item.distorted, out_dir / item.triplet.distorted_path);
            rows[id] = std::move(item.triplet);
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = groups;
      }
    };
    const std::size_t nthreads = std::min<std::size_t>(forge_threads(), std::max<std::uint64_t>(groups, 1));
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    write_manifest(rows, out_dir / "manifest.jsonl");
    return rows;
  }

 private:
  static constexpr std::uint64_t kCleanSalt = 0xc1ea40000000c1eaULL;

  std::size_t sample_count(SeededRng& rng) const {
    double u = rng.uniform();
    for (std::size_t i = 0; i < n_probs_.size(); ++i) {
      if (u < n_probs_[i]) return i + 1;
      u -= n_probs_[i];
    }
    return n_probs_.size();
  }

  // Partial prompts need two applied categories. The conditional rate is raised on
  // eligible items so the overall partial share still equals mode_fractions[1].
  RestorationRequest sample_request(const LabelSet& applied, SeededRng& rng) const {
    const bool negative = rng.uniform() < cfg_.mode_fractions[2] && applied.size() < kNumCategories;
    if (negative) return make_negative(applied, rng, cfg_.prompt_style);
    if (applied.size() >= 2 && rng.uniform() < partial_given_eligible_)
      return make_partial(applied, rng, cfg_.prompt_style);
    return make_full(applied, rng, cfg_.prompt_style);
  }

  void load_clean_list() {
    namespace fs = std::filesystem;
    for (const auto& e : fs::directory_iterator(*cfg_.clean_dir)) {
      const auto ext = detail::lower_ext(e.path());
      if (e.is_regular_file() && (ext == ".png" || ext == ".ppm" || ext == ".pgm"))
        clean_files_.push_back(e.path());
    }
    std::sort(clean_files_.begin(), clean_files_.end());
    if (clean_files_.empty()) throw IoError("no images found in " + *cfg_.clean_dir);
  }

  static Image square_resize(const Image& src, int size) {
    const int side = std::min(src.height(), src.width());
    const int oy = (src.height() - side) / 2, ox = (src.width() - side) / 2;
    Image crop(side, side, 3);
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        for (int c = 0; c < 3; ++c) crop(y, x, c) = src(oy + y, ox + x, src.channels() == 3 ? c : 0);
    return resize_to(crop, size, size);
  }

  DatasetConfig cfg_;
  std::vector<DistortionKind> pool_;
  std::vector<double> n_probs_;
  double partial_given_eligible_ = 0.0;
  std::vector<std::filesystem::path> clean_files_;
};

struct LoadedItem {
  Image clean;
  Image distorted;
  std::optional<DepthMap> depth;
};

inline LoadedItem load_item(const std::filesystem::path& root, const Triplet& t) {
  LoadedItem it{read_image(root / t.clean_path), read_image(root / t.distorted_path), std::nullopt};
  if (t.depth_path) it.depth = read_depth(root / *t.depth_path);
  return it;
}

}  // namespace prism

#endif
