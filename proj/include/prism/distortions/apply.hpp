#ifndef PRISM_DISTORTIONS_APPLY_HPP
#define PRISM_DISTORTIONS_APPLY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/filters.hpp"
#include "prism/core/image.hpp"
#include "prism/core/perlin.hpp"
#include "prism/core/resize.hpp"
#include "prism/core/rng.hpp"
#include "prism/core/warp.hpp"
#include "prism/distortions/spec.hpp"

namespace prism {

// Building blocks shared by the forward transforms and the oracle inverses.
namespace fx {

inline constexpr std::array<std::array<double, 3>, 6> kCastColors = {{
    {1.00, 0.72, 0.40},  // warm
    {0.45, 0.65, 1.00},  // cool
    {0.45, 1.00, 0.45},  // green
    {1.00, 0.45, 1.00},  // magenta
    {0.45, 1.00, 1.00},  // cyan
    {1.00, 1.00, 0.45},  // yellow
}};

/// Depth range (in the same units as visibility) mapped onto D = 1 for fog.
inline constexpr double kFogRange = 3000.0;
inline constexpr double kFogShade = 0.88;

inline double smoothstep(double e0, double e1, double x) noexcept {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

/// Antialiased line kernel of `length` taps along angle `theta` (radians, 0 = horizontal).
inline Kernel line_kernel(int length, double theta) {
  const int half = static_cast<int>(std::ceil((length - 1) / 2.0)) + 1;
  const int size = 2 * half + 1;
  Kernel k{size, size, std::vector<double>(static_cast<std::size_t>(size) * size, 0.0)};
  const double ux = std::cos(theta), uy = std::sin(theta);
  for (int i = 0; i < length; ++i) {
    const double t = i - (length - 1) / 2.0;
    const double px = half + t * ux, py = half + t * uy;
    const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
    const double fx = px - x0, fy = py - y0;
    auto splat = [&](int y, int x, double w) {
      if (y >= 0 && y < size && x >= 0 && x < size) k.weights[static_cast<std::size_t>(y) * size + x] += w;
    };
    splat(y0, x0, (1 - fx) * (1 - fy));
    splat(y0, x0 + 1, fx * (1 - fy));
    splat(y0 + 1, x0, (1 - fx) * fy);
    splat(y0 + 1, x0 + 1, fx * fy);
  }
  const double s = k.sum();
  for (double& w : k.weights) w /= s;
  return k;
}

inline double direction_angle(int code) {
  constexpr double q = std::numbers::pi / 4.0;
  switch (code) {
    case 0: return 0.0;
    case 1: return 2 * q;
    case 2: return q;
    default: return -q;
  }
}

inline Kernel motion_kernel(const DistortionSpec& s) {
  return line_kernel(s.int_param("kernel_size"), direction_angle(s.int_param("direction")));
}

/// Gaussian sigma implied by an odd kernel size (OpenCV convention).
inline double defocus_sigma(int kernel_size) { return 0.3 * ((kernel_size - 1) * 0.5 - 1.0) + 0.8; }

/// Smoothed U(-1,1) displacement scaled by alpha.
inline DisplacementField elastic_field(const DistortionSpec& s, int h, int w) {
  SeededRng rng(s.seed);
  std::vector<double> rx(static_cast<std::size_t>(h) * w), ry(rx.size());
  for (auto& v : rx) v = rng.uniform(-1.0, 1.0);
  for (auto& v : ry) v = rng.uniform(-1.0, 1.0);
  const double sigma = s.param("sigma"), alpha = s.param("alpha");
  DisplacementField f(h, w);
  f.dx = gaussian_blur_field(rx, h, w, sigma);
  f.dy = gaussian_blur_field(ry, h, w, sigma);
  for (auto& v : f.dx) v *= alpha;
  for (auto& v : f.dy) v *= alpha;
  return f;
}

/// Gaussian-filtered normal noise scaled by strength.
inline DisplacementField refraction_field(const DistortionSpec& s, int h, int w) {
  SeededRng rng(s.seed);
  std::vector<double> rx(static_cast<std::size_t>(h) * w), ry(rx.size());
  for (auto& v : rx) v = rng.normal();
  for (auto& v : ry) v = rng.normal();
  const double sigma = s.param("sigma"), strength = s.param("strength");
  DisplacementField f(h, w);
  f.dx = gaussian_blur_field(rx, h, w, sigma);
  f.dy = gaussian_blur_field(ry, h, w, sigma);
  for (auto& v : f.dx) v *= strength;
  for (auto& v : f.dy) v *= strength;
  return f;
}

/// Cloud cover and its displaced shadow, both in [0,1].
struct CloudLayers {
  Image cover;
  Image shadow;
};

inline CloudLayers cloud_layers(const DistortionSpec& s, int h, int w) {
  SeededRng rng(s.seed);
  const double scale = std::max(4.0, std::max(h, w) / 2.0);
  Image noise = fractal_noise(h, w, scale, 4, rng);
  Image cover(h, w, 1);
  for (std::size_t i = 0; i < cover.size(); ++i) cover.data()[i] = smoothstep(0.35, 0.75, noise.data()[i]);
  cover = gaussian_blur(cover, s.param("blur_scale"));
  const int oy = std::max(1, h / 10), ox = std::max(1, w / 10);
  Image shadow(h, w, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) shadow(y, x) = cover(clamp_index(y - oy, h), clamp_index(x - ox, w));
  return {std::move(cover), std::move(shadow)};
}

inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

/// Light fog over the farthest pixels (depth above the given percentile).
inline void add_depth_fog(Image& img, const DepthMap& depth, double pct, double visibility) {
  const double cut = percentile({depth.data().begin(), depth.data().end()}, pct);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double d = depth(y, x);
      if (d < cut) continue;
      const double t = 1.0 - std::exp(-d * kFogRange / visibility);
      for (int c = 0; c < img.channels(); ++c) img(y, x, c) = img(y, x, c) * (1.0 - t) + kFogShade * t;
    }
}

/// Sparse drops smeared by a line kernel: one streak layer at one scale.
inline Image streak_layer(int h, int w, int length, double theta, double zoom, double density, SeededRng& rng) {
  const int sh = std::max(1, static_cast<int>(std::ceil(h / zoom)));
  const int sw = std::max(1, static_cast<int>(std::ceil(w / zoom)));
  Image seeds(sh, sw, 1);
  for (double& v : seeds.data()) v = rng.coin(density) ? rng.uniform(0.6, 1.0) : 0.0;
  Image streaks = correlate_raw(seeds, line_kernel(length, theta));
  for (double& v : streaks.data()) v = clamp_unit(v * length * 0.6);
  return resize_to(streaks, h, w);
}

inline Image screen(const Image& img, const Image& layer, double opacity) {
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double a = opacity * layer(y, x);
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = 1.0 - (1.0 - img(y, x, c)) * (1.0 - a);
    }
  return out;
}

struct Drop {
  double cy, cx, radius;
};

inline std::vector<Drop> raindrop_layout(const DistortionSpec& s, int h, int w) {
  SeededRng rng(s.seed);
  std::vector<Drop> drops;
  const int n = s.int_param("count");
  for (int i = 0; i < n; ++i) {
    const double cy = rng.uniform(0.0, h), cx = rng.uniform(0.0, w);
    drops.push_back({cy, cx, rng.uniform(kRaindropRadiusMin, kRaindropRadiusMax)});
  }
  return drops;
}

}  // namespace fx

namespace detail {

inline Image apply_motion_blur(const DistortionSpec& s, const Image& img, const DepthMap* depth) {
  Image blurred = correlate_raw(img, fx::motion_kernel(s));
  const int mask = s.int_param("depth_mask");
  if (mask == 0) return blurred.clamp();
  const double tau = s.param("tau_depth");
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double d = (*depth)(y, x);
      const bool hit = mask == 1 ? d < tau : d >= tau;
      if (hit)
        for (int c = 0; c < img.channels(); ++c) out(y, x, c) = blurred(y, x, c);
    }
  return out.clamp();
}

inline Image apply_color_jitter(const DistortionSpec& s, const Image& img) {
  const std::array<double, 3> gain{1.0 + s.param("delta_r"), 1.0 + s.param("delta_g"), 1.0 + s.param("delta_b")};
  const auto& cast = fx::kCastColors[static_cast<std::size_t>(s.int_param("cast"))];
  const double a = s.param("cast_alpha");
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const double g = img.channels() == 3 ? gain[c] : (gain[0] + gain[1] + gain[2]) / 3.0;
        const double tint = img.channels() == 3 ? cast[c] : (cast[0] + cast[1] + cast[2]) / 3.0;
        out(y, x, c) = (1.0 - a) * clamp_unit(img(y, x, c) * g) + a * tint;
      }
  return out.clamp();
}

inline double soft_clip(double v, double tau) {
  if (v <= tau) return v;
  return tau + (1.0 - tau) * std::tanh((v - tau) / (1.0 - tau));
}

inline Image apply_overexposure(const DistortionSpec& s, const Image& img) {
  const double f = s.param("factor"), tau = s.param("threshold");
  Image out = img;
  for (double& v : out.data()) v = soft_clip(std::pow(v, 1.0 / f) * f, tau);
  return out.clamp();
}

inline Image apply_underexposure(const DistortionSpec& s, const Image& img) {
  const double f = s.param("factor"), tau = s.param("threshold"), sigma = s.param("noise_sigma");
  SeededRng rng(s.seed);
  Image out = img;
  for (double& v : out.data()) {
    v = std::pow(v, 1.0 / f);
    if (v < tau) v = tau * (v / tau) * (v / tau);
  }
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      const double w = 1.0 - luminance(out, y, x);
      for (int c = 0; c < out.channels(); ++c) out(y, x, c) += sigma * w * rng.normal();
    }
  return out.clamp();
}

inline Image apply_contrast(const DistortionSpec& s, const Image& img) {
  const double f = s.param("factor");
  double m = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) m += luminance(img, y, x);
  m /= static_cast<double>(img.pixels());
  Image out = img;
  for (double& v : out.data()) v = m + f * (v - m);
  return out.clamp();
}

inline Image apply_saturation(const DistortionSpec& s, const Image& img) {
  if (img.channels() == 1) return img;
  const double f = s.param("factor");
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double g = luminance(img, y, x);
      for (int c = 0; c < 3; ++c) out(y, x, c) = g + f * (img(y, x, c) - g);
    }
  return out.clamp();
}

inline Image apply_haze(const DistortionSpec& s, const Image& img, const DepthMap& depth) {
  const double a = s.param("alpha");
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double da = depth(y, x) * a;
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = img(y, x, c) * (1.0 - da) + da;
    }
  return out.clamp();
}

inline Image apply_rain(const DistortionSpec& s, const Image& img, const DepthMap& depth) {
  SeededRng rng(s.seed);
  const int h = img.height(), w = img.width();
  const double theta = std::numbers::pi / 2.0 + s.param("angle");
  const Image fine = fx::streak_layer(h, w, s.int_param("kernel_small"), theta, 1.0, 0.012, rng);
  const Image coarse = fx::streak_layer(h, w, s.int_param("kernel_large"), theta, s.param("zoom"), 0.02, rng);
  Image streaks(h, w, 1);
  for (std::size_t i = 0; i < streaks.size(); ++i)
    streaks.data()[i] = 1.0 - (1.0 - fine.data()[i]) * (1.0 - coarse.data()[i]);
  Image out = fx::screen(img, streaks, s.param("opacity"));
  fx::add_depth_fog(out, depth, 0.90, s.param("visibility"));
  return out.clamp();
}

inline Image apply_snow(const DistortionSpec& s, const Image& img, const DepthMap& depth) {
  SeededRng rng(s.seed);
  const int h = img.height(), w = img.width();
  constexpr std::array<double, 3> density{0.006, 0.003, 0.0015};
  constexpr std::array<double, 3> radius{0.6, 1.0, 1.6};
  Image flakes(h, w, 1);
  for (std::size_t layer = 0; layer < density.size(); ++layer) {
    Image seeds(h, w, 1);
    for (double& v : seeds.data()) v = rng.coin(density[layer]) ? rng.uniform(0.7, 1.0) : 0.0;
    const auto k = gaussian_kernel_1d(radius[layer], gaussian_size_for(radius[layer]));
    Image soft = separable_raw(seeds, k, k);
    const Image drift = correlate_raw(soft, fx::line_kernel(3, std::numbers::pi / 2.0 + s.param("angle")));
    const double gain = 2.0 * std::numbers::pi * radius[layer] * radius[layer];
    for (std::size_t i = 0; i < flakes.size(); ++i) {
      const double v = clamp_unit(drift.data()[i] * gain);
      flakes.data()[i] = 1.0 - (1.0 - flakes.data()[i]) * (1.0 - v);
    }
  }
  Image out = fx::screen(img, flakes, 0.9);
  fx::add_depth_fog(out, depth, 0.95, s.param("visibility"));
  return out.clamp();
}

inline Image apply_clouds(const DistortionSpec& s, const Image& img) {
  const auto layers = fx::cloud_layers(s, img.height(), img.width());
  const double opacity = s.param("opacity"), shadow = s.param("shadow");
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double a = opacity * layers.cover(y, x);
      const double dark = 1.0 - shadow * layers.shadow(y, x);
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = img(y, x, c) * dark * (1.0 - a) + a * 0.97;
    }
  return out.clamp();
}

inline Image apply_raindrops(const DistortionSpec& s, const Image& img) {
  const Image soft = gaussian_blur(img, 1.5);
  const double darken = s.param("edge_darken");
  Image out = img;
  for (const auto& d : fx::raindrop_layout(s, img.height(), img.width())) {
    const int y0 = std::max(0, static_cast<int>(d.cy - d.radius)), y1 = std::min(img.height() - 1, static_cast<int>(d.cy + d.radius));
    const int x0 = std::max(0, static_cast<int>(d.cx - d.radius)), x1 = std::min(img.width() - 1, static_cast<int>(d.cx + d.radius));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double ry = y - d.cy, rx = x - d.cx;
        const double rho = std::hypot(ry, rx) / d.radius;
        if (rho > 1.0) continue;
        // Inverted, magnified view through a spherical lens.
        const double sy = d.cy - 0.6 * ry, sx = d.cx - 0.6 * rx;
        const double shade = 1.0 - darken * fx::smoothstep(0.7, 1.0, rho);
        for (int c = 0; c < img.channels(); ++c) out(y, x, c) = sample_bilinear(soft, sy, sx, c) * shade;
      }
  }
  return out.clamp();
}

inline Image apply_noise(const DistortionSpec& s, const Image& img) {
  SeededRng rng(s.seed);
  Image out = img;
  if (s.int_param("mode") == 0) {
    const double sigma = s.param("sigma");
    for (double& v : out.data()) v += sigma * rng.normal();
  } else {
    const double p = s.param("corruption");
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x)
        if (rng.coin(p)) {
          const double v = rng.coin(0.5) ? 1.0 : 0.0;
          for (int c = 0; c < img.channels(); ++c) out(y, x, c) = v;
        }
  }
  return out.clamp();
}

inline Image apply_pixelation(const DistortionSpec& s, const Image& img) {
  const double f = s.param("factor");
  const int h = std::max(1, static_cast<int>(std::lround(img.height() / f)));
  const int w = std::max(1, static_cast<int>(std::lround(img.width() / f)));
  return resize_nearest(resize_to(img, h, w), img.height(), img.width()).clamp();
}

}  // namespace detail

/// Applies one distortion. `depth` is required by haze, rain, snow and depth-masked motion blur.
inline Image apply(const DistortionSpec& spec, const Image& img, const DepthMap* depth = nullptr) {
  detail::require(!img.empty(), "apply: empty image");
  if (uses_depth(spec)) {
    if (depth == nullptr || depth->empty())
      throw InvalidArgument("distortion " + std::string(name(spec.kind)) + " requires a depth map");
    detail::require(depth->matches(img), "apply: depth map dimensions do not match image");
  }
  using K = DistortionKind;
  switch (spec.kind) {
    case K::motion_blur: return detail::apply_motion_blur(spec, img, depth);
    case K::elastic_warp: return warp(img, fx::elastic_field(spec, img.height(), img.width()));
    case K::refraction: return warp(img, fx::refraction_field(spec, img.height(), img.width()));
    case K::defocus_blur: {
      const int k = spec.int_param("kernel_size");
      const auto g = gaussian_kernel_1d(fx::defocus_sigma(k), k);
      return separable_raw(img, g, g).clamp();
    }
    case K::low_light: {
      Image out = img;
      for (double& v : out.data()) v *= spec.param("factor");
      return out.clamp();
    }
    case K::color_jitter: return detail::apply_color_jitter(spec, img);
    case K::overexposure: return detail::apply_overexposure(spec, img);
    case K::underexposure: return detail::apply_underexposure(spec, img);
    case K::contrast: return detail::apply_contrast(spec, img);
    case K::saturation: return detail::apply_saturation(spec, img);
    case K::haze: return detail::apply_haze(spec, img, *depth);
    case K::rain: return detail::apply_rain(spec, img, *depth);
    case K::snow: return detail::apply_snow(spec, img, *depth);
    case K::clouds: return detail::apply_clouds(spec, img);
    case K::raindrops: return detail::apply_raindrops(spec, img);
    case K::gaussian_noise: return detail::apply_noise(spec, img);
    case K::pixelation: return detail::apply_pixelation(spec, img);
  }
  throw InvalidArgument("apply: unknown distortion kind");
}

/// Left fold of apply over `specs` in the given order.
inline Image apply_chain(const std::vector<DistortionSpec>& specs, const Image& img, const DepthMap* depth = nullptr) {
  detail::require(!specs.empty(), "apply_chain: empty distortion list");
  Image out = img;
  for (const auto& s : specs) out = apply(s, out, depth);
  return out;
}

}  // namespace prism

#endif
