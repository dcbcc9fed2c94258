#ifndef PRISM_DATASET_SCENES_HPP
#define PRISM_DATASET_SCENES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/image.hpp"
#include "prism/core/perlin.hpp"
#include "prism/core/rng.hpp"

namespace prism {

enum class SceneKind { gradient, shapes, texture, checker };

inline constexpr std::array<std::string_view, 4> kSceneNames = {"gradient", "shapes", "texture", "checker"};

inline std::string_view name(SceneKind s) noexcept { return kSceneNames[static_cast<std::size_t>(s)]; }

inline SceneKind parse_scene(std::string_view s) {
  for (std::size_t i = 0; i < kSceneNames.size(); ++i)
    if (kSceneNames[i] == s) return static_cast<SceneKind>(i);
  throw ParseError("unknown scene kind '" + std::string(s) + "'");
}

namespace scene_detail {

using Color = std::array<double, 3>;

inline Color random_color(SeededRng& rng, double lo = 0.1, double hi = 0.9) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

inline void put(Image& img, int y, int x, const Color& c) {
  for (int k = 0; k < 3; ++k) img(y, x, k) = c[k];
}

/// Vertical blend between two colors plus a horizontal ripple with a whole
/// number of periods, so every row mean is exactly the blend value.
inline Image gradient(int size, SeededRng& rng) {
  const Color a = random_color(rng, 0.2, 0.8), b = random_color(rng, 0.2, 0.8);
  const int periods = static_cast<int>(rng.uniform_int(2, 6));
  const double amp = rng.uniform(0.04, 0.1), phase = rng.uniform(0, 2 * std::numbers::pi);
  Image img(size, size, 3);
  for (int y = 0; y < size; ++y) {
    const double t = static_cast<double>(y) / (size - 1);
    for (int x = 0; x < size; ++x) {
      const double r = amp * std::sin(2 * std::numbers::pi * periods * x / size + phase);
      for (int k = 0; k < 3; ++k) img(y, x, k) = a[k] + (b[k] - a[k]) * t + r;
    }
  }
  return img;
}

inline Image shapes(int size, SeededRng& rng) {
  Image img = gradient(size, rng);
  const int count = static_cast<int>(rng.uniform_int(6, 14));
  for (int s = 0; s < count; ++s) {
    const Color c = random_color(rng);
    const double cy = rng.uniform(0, size), cx = rng.uniform(0, size);
    const double r = rng.uniform(0.06, 0.22) * size;
    const bool disc = rng.coin();
    const double ry = disc ? r : r * rng.uniform(0.4, 1.2);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        const double dy = y + 0.5 - cy, dx = x + 0.5 - cx;
        const bool inside = disc ? dy * dy + dx * dx <= r * r : std::abs(dy) <= ry && std::abs(dx) <= r;
        if (inside) put(img, y, x, c);
      }
  }
  return img;
}

inline Image texture(int size, SeededRng& rng) {
  const Color a = random_color(rng), b = random_color(rng);
  const Image coarse = fractal_noise(size, size, size / 3.0, 4, rng);
  const Image fine = perlin_noise(size, size, 4.0, rng);
  Image img(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double t = coarse(y, x), d = 0.15 * (fine(y, x) - 0.5);
      for (int k = 0; k < 3; ++k) img(y, x, k) = a[k] + (b[k] - a[k]) * t + d;
    }
  return img.clamp();
}

inline Image checker(int size, SeededRng& rng) {
  const Color a = random_color(rng), b = random_color(rng);
  const int cell = static_cast<int>(rng.uniform_int(4, std::max(4, size / 4)));
  Image img(size, size, 3);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) put(img, y, x, ((y / cell + x / cell) % 2) ? a : b);
  return img;
}

inline constexpr double kSceneChroma = 0.25;

/// Gives every clean scene the same tonal and color statistics so that
/// photometric degradations are identifiable without a reference:
///   luma 1st/99th percentiles at 0.05/0.95 (exact, luma is never altered after the stretch),
///   channel means equal to the luma mean (gray world, via luma-neutral offsets),
///   mean chroma near kSceneChroma, with per-pixel chroma shrink where a channel would leave [0,1].
inline void normalize(Image& img) {
  const std::size_t n = img.pixels();
  constexpr double wr = 0.299, wg = 0.587, wb = 0.114;
  std::vector<double> L(n), d(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* px = &img.data()[3 * i];
    L[i] = wr * px[0] + wg * px[1] + wb * px[2];
    for (int k = 0; k < 3; ++k) d[3 * i + k] = px[k] - L[i];
  }
  std::vector<double> sorted = L;
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted[n / 100], hi = sorted[n - 1 - n / 100];
  for (double& v : L) v = hi - lo > 1e-6 ? clamp_unit(0.05 + 0.9 * (v - lo) / (hi - lo)) : 0.5;

  std::array<double, 3> mean_d{};
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) mean_d[k] += d[3 * i + k] / static_cast<double>(n);
  double chroma = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -1e9, mn = 1e9;
    for (int k = 0; k < 3; ++k) {
      d[3 * i + k] -= mean_d[k];
      mx = std::max(mx, d[3 * i + k]);
      mn = std::min(mn, d[3 * i + k]);
    }
    chroma += (mx - mn) / static_cast<double>(n);
  }
  const double gain = chroma > 1e-6 ? kSceneChroma / chroma : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double t = gain;
    for (int k = 0; k < 3; ++k) {
      const double dk = d[3 * i + k];
      if (dk > 0) t = std::min(t, (1.0 - L[i]) / dk);
      if (dk < 0) t = std::min(t, -L[i] / dk);
    }
    for (int k = 0; k < 3; ++k) img.data()[3 * i + k] = L[i] + t * d[3 * i + k];
  }
  img.clamp();
}

}  // namespace scene_detail

/// Synthetic depth: far at the top, with a smooth random perturbation.
inline DepthMap synth_depth(int height, int width, SeededRng& rng) {
  const Image n = perlin_noise(height, width, std::max(height, width) / 2.0, rng);
  DepthMap d(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      d(y, x) = 0.7 * (1.0 - static_cast<double>(y) / std::max(1, height - 1)) + 0.3 * n(y, x);
  return d.clamp();
}

inline std::pair<Image, DepthMap> generate_clean(int image_size, SceneKind kind, SeededRng& rng) {
  detail::require(image_size >= 16, "generate_clean: image size must be at least 16");
  Image img;
  switch (kind) {
    case SceneKind::gradient: img = scene_detail::gradient(image_size, rng); break;
    case SceneKind::shapes: img = scene_detail::shapes(image_size, rng); break;
    case SceneKind::texture: img = scene_detail::texture(image_size, rng); break;
    case SceneKind::checker: img = scene_detail::checker(image_size, rng); break;
  }
  scene_detail::normalize(img);
  return {std::move(img), synth_depth(image_size, image_size, rng)};
}

}  // namespace prism

#endif
