#ifndef PRISM_RESTORATION_INVERSE_HPP
#define PRISM_RESTORATION_INVERSE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/filters.hpp"
#include "prism/core/image.hpp"
#include "prism/core/resize.hpp"
#include "prism/core/warp.hpp"
#include "prism/distortions/apply.hpp"
#include "prism/distortions/labels.hpp"
#include "prism/distortions/spec.hpp"

namespace prism {

/// Composite order: occlusions, photometric, noise and blur, geometric, resolution.
inline constexpr std::array<Category, kNumCategories> kCanonicalOrder = {
    Category::rain,         Category::snow,        Category::clouds,       Category::haze,
    Category::low_light,    Category::brightness,  Category::contrast,     Category::color_shift,
    Category::gaussian_noise, Category::defocus_blur, Category::motion_blur, Category::elastic_warp,
    Category::refraction,   Category::pixelation};

inline std::size_t canonical_rank(Category c) noexcept {
  for (std::size_t i = 0; i < kCanonicalOrder.size(); ++i)
    if (kCanonicalOrder[i] == c) return i;
  return kCanonicalOrder.size();
}

/// Parameters handed to an inverse. Oracle hints carry the exact forward specs
/// of the category in application order; blind hints carry named estimates.
struct InverseHints {
  std::vector<DistortionSpec> specs;
  std::map<std::string, double, std::less<>> estimates;

  bool oracle() const noexcept { return !specs.empty(); }
  double estimate(std::string_view key, double fallback) const {
    auto it = estimates.find(key);
    return it == estimates.end() ? fallback : it->second;
  }
};

/// Name of the inverse algorithm used for `c` in oracle or blind mode.
inline std::string_view inverse_name(Category c, bool oracle) noexcept {
  switch (c) {
    case Category::low_light: return oracle ? "divide_gain" : "percentile_gain";
    case Category::brightness: return oracle ? "inverse_tone_curve" : "mean_gamma";
    case Category::contrast: return oracle ? "inverse_contrast" : "percentile_stretch";
    case Category::color_shift: return oracle ? "inverse_color_transform" : "gray_world";
    case Category::haze: return oracle ? "inverse_haze_blend" : "dark_channel";
    case Category::clouds: return oracle ? "inverse_cloud_blend" : "dark_channel";
    case Category::gaussian_noise: return "sigma_adaptive_denoise";
    case Category::defocus_blur: return oracle ? "regularized_deconvolution" : "unsharp_mask";
    case Category::motion_blur: return oracle ? "regularized_deconvolution" : "directional_unsharp";
    case Category::pixelation: return "block_grid_bicubic";
    case Category::rain:
    case Category::snow: return "median_detail_reinjection";
    case Category::elastic_warp:
    case Category::refraction: return oracle ? "inverse_field_warp" : "identity";
  }
  return "identity";
}

namespace inv {

inline double luma_percentile(const Image& img, double q) {
  std::vector<double> l;
  l.reserve(img.pixels());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) l.push_back(luminance(img, y, x));
  return fx::percentile(std::move(l), q);
}

inline double mean_luma(const Image& img) {
  double m = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) m += luminance(img, y, x);
  return m / static_cast<double>(img.pixels());
}

inline Image scale(const Image& img, double gain) {
  Image out = img;
  for (double& v : out.data()) v *= gain;
  return out.clamp();
}

/// x such that soft_clip(x, tau) = v, for v < 1.
inline double soft_clip_inverse(double v, double tau) {
  if (v <= tau) return v;
  const double t = std::min((v - tau) / (1.0 - tau), 1.0 - 1e-12);
  return tau + (1.0 - tau) * std::atanh(t);
}

inline Image invert_overexposure(const DistortionSpec& s, const Image& img) {
  const double f = s.param("factor"), tau = s.param("threshold");
  Image out = img;
  for (double& v : out.data()) v = std::pow(std::clamp(soft_clip_inverse(v, tau) / f, 0.0, 1.0), f);
  return out.clamp();
}

inline Image invert_contrast(const Image& img, double f) {
  const double m = mean_luma(img);
  Image out = img;
  for (double& v : out.data()) v = m + (v - m) / f;
  return out.clamp();
}

inline Image invert_saturation(const Image& img, double f) {
  if (img.channels() == 1) return img;
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double g = luminance(img, y, x);
      for (int c = 0; c < 3; ++c) out(y, x, c) = g + (img(y, x, c) - g) / f;
    }
  return out.clamp();
}

inline Image invert_color_jitter(const DistortionSpec& s, const Image& img) {
  const std::array<double, 3> gain{1.0 + s.param("delta_r"), 1.0 + s.param("delta_g"), 1.0 + s.param("delta_b")};
  const auto& cast = fx::kCastColors[static_cast<std::size_t>(s.int_param("cast"))];
  const double a = s.param("cast_alpha");
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) {
        const double g = img.channels() == 3 ? gain[c] : (gain[0] + gain[1] + gain[2]) / 3.0;
        const double tint = img.channels() == 3 ? cast[c] : (cast[0] + cast[1] + cast[2]) / 3.0;
        out(y, x, c) = (img(y, x, c) - a * tint) / (1.0 - a) / g;
      }
  return out.clamp();
}

inline Image gray_world(const Image& img) {
  if (img.channels() == 1) return img;
  std::array<double, 3> mean{};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) mean[c] += img(y, x, c);
  const double gray = (mean[0] + mean[1] + mean[2]) / 3.0;
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < 3; ++c) out(y, x, c) *= mean[c] > 0.0 ? gray / mean[c] : 1.0;
  return out.clamp();
}

inline Image invert_haze(const Image& img, const DepthMap& depth, double alpha) {
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double da = depth(y, x) * alpha;
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = (img(y, x, c) - da) / (1.0 - da);
    }
  return out.clamp();
}

/// Dark-channel dehazing with airlight from the brightest dark-channel pixels.
inline Image dehaze_dark_channel(const Image& img, double omega = 0.95, double t_min = 0.1) {
  const Image dark = dark_channel(img, 3);
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < dark.size(); ++i) order.emplace_back(dark.data()[i], i);
  const std::size_t top = std::max<std::size_t>(1, order.size() / 1000);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top), order.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  std::array<double, 3> air{};
  for (std::size_t k = 0; k < top; ++k) {
    const int y = static_cast<int>(order[k].second) / img.width(), x = static_cast<int>(order[k].second) % img.width();
    for (int c = 0; c < img.channels(); ++c) air[c] += img(y, x, c) / static_cast<double>(top);
  }
  Image normed = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) normed(y, x, c) = img(y, x, c) / std::max(air[c], 1e-3);
  const Image t_dark = gaussian_blur(dark_channel(normed.clamp(), 3), 2.0);
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double t = std::max(t_min, 1.0 - omega * t_dark(y, x));
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = (img(y, x, c) - air[c]) / t + air[c];
    }
  return out.clamp();
}

inline Image invert_clouds(const DistortionSpec& s, const Image& img) {
  const auto layers = fx::cloud_layers(s, img.height(), img.width());
  const double opacity = s.param("opacity"), shadow = s.param("shadow");
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double a = opacity * layers.cover(y, x);
      const double denom = std::max((1.0 - a) * (1.0 - shadow * layers.shadow(y, x)), 0.02);
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = (img(y, x, c) - a * 0.97) / denom;
    }
  return out.clamp();
}

inline bool is_impulse(const Image& img, int y, int x) {
  const double v0 = img(y, x, 0);
  if (v0 != 0.0 && v0 != 1.0) return false;
  for (int c = 1; c < img.channels(); ++c)
    if (img(y, x, c) != v0) return false;
  return true;
}

inline double impulse_fraction(const Image& img) {
  std::size_t n = 0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) n += is_impulse(img, y, x) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(img.pixels());
}

/// Replaces impulse pixels by the median of their non-impulse neighbours.
inline Image remove_impulses(const Image& img) {
  Image out = img;
  std::vector<double> win;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      if (!is_impulse(img, y, x)) continue;
      for (int r = 1; r <= 3; ++r) {
        for (int c = 0; c < img.channels(); ++c) {
          win.clear();
          for (int i = -r; i <= r; ++i)
            for (int j = -r; j <= r; ++j) {
              const int yy = reflect_index(y + i, img.height()), xx = reflect_index(x + j, img.width());
              if (!is_impulse(img, yy, xx)) win.push_back(img(yy, xx, c));
            }
          if (win.empty()) break;
          auto mid = win.begin() + static_cast<std::ptrdiff_t>(win.size() / 2);
          std::nth_element(win.begin(), mid, win.end());
          out(y, x, c) = *mid;
        }
        if (!win.empty()) break;
      }
    }
  return out;
}

/// Robust noise level from the finest diagonal detail band of the luma.
inline double estimate_noise_sigma(const Image& img) {
  std::vector<double> hh;
  for (int y = 0; y + 1 < img.height(); y += 2)
    for (int x = 0; x + 1 < img.width(); x += 2)
      hh.push_back(std::abs(luminance(img, y, x) - luminance(img, y, x + 1) - luminance(img, y + 1, x) +
                            luminance(img, y + 1, x + 1)) /
                   2.0);
  return fx::percentile(std::move(hh), 0.5) / 0.6745;
}

/// Edge-preserving smoothing: a bilateral filter whose range scale follows sigma.
inline Image bilateral(const Image& img, double spatial, double range) {
  const int r = static_cast<int>(std::ceil(2.0 * spatial));
  Image out = img;
  const double is2 = 1.0 / (2.0 * spatial * spatial), ir2 = 1.0 / (2.0 * range * range);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      std::array<double, 3> acc{};
      double wsum = 0.0;
      for (int i = -r; i <= r; ++i)
        for (int j = -r; j <= r; ++j) {
          const int yy = reflect_index(y + i, img.height()), xx = reflect_index(x + j, img.width());
          double d2 = 0.0;
          for (int c = 0; c < img.channels(); ++c) d2 += (img(yy, xx, c) - img(y, x, c)) * (img(yy, xx, c) - img(y, x, c));
          const double w = std::exp(-(i * i + j * j) * is2 - d2 / img.channels() * ir2);
          for (int c = 0; c < img.channels(); ++c) acc[c] += w * img(yy, xx, c);
          wsum += w;
        }
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = acc[c] / wsum;
    }
  return out.clamp();
}

inline Image denoise_gaussian(const Image& img, double sigma) {
  return bilateral(img, 1.0 + 8.0 * sigma, 2.5 * sigma);
}

/// mu such that E[max(0, mu + sigma N)] = m, for N standard normal.
inline double unclip_mean(double m, double sigma) {
  if (sigma <= 0.0) return m;
  auto clipped_mean = [&](double mu) {
    const double z = mu / sigma;
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    return mu * cdf + sigma * pdf;
  };
  double lo = -4.0 * sigma, hi = std::max(m, 0.0) + sigma;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (clipped_mean(mid) < m ? lo : hi) = mid;
  }
  return std::max(0.0, 0.5 * (lo + hi));
}

/// Tone-curve inverse after suppressing the shadow noise at its stated level;
/// local means near black are corrected for the clamp before inversion.
inline Image invert_underexposure(const DistortionSpec& s, const Image& img) {
  const double f = s.param("factor"), tau = s.param("threshold"), sigma = s.param("noise_sigma");
  // The shadow branch amplifies residual noise, so dark regions get a wider window.
  const Image smooth = denoise_gaussian(img, sigma), wide = bilateral(img, 3.0, 2.5 * sigma);
  Image out = smooth;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double lum = luminance(smooth, y, x);
      const double local_sigma = sigma * (1.0 - lum);
      const double w = 1.0 - fx::smoothstep(0.5 * tau, tau, lum);
      for (int c = 0; c < img.channels(); ++c) {
        double v = unclip_mean((1.0 - w) * smooth(y, x, c) + w * wide(y, x, c), local_sigma);
        if (v < tau) v = std::sqrt(v * tau);
        out(y, x, c) = std::pow(v, f);
      }
    }
  return out.clamp();
}

/// Minimizes |k * x - y|^2 + lambda |lap x|^2 by conjugate gradients.
inline Image deconvolve(const Image& observed, const Kernel& k, double lambda = 2e-3, int iterations = 40) {
  const Kernel lap{3, 3, {0, 1, 0, 1, -4, 1, 0, 1, 0}};
  auto apply_normal = [&](const Image& x) {
    Image a = correlate_adjoint_raw(correlate_raw(x, k), k);
    const Image l = correlate_adjoint_raw(correlate_raw(x, lap), lap);
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += lambda * l.data()[i];
    return a;
  };
  auto dotp = [](const Image& a, const Image& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
    return s;
  };
  Image x = observed;
  Image r = correlate_adjoint_raw(observed, k);
  const Image ax = apply_normal(x);
  for (std::size_t i = 0; i < r.size(); ++i) r.data()[i] -= ax.data()[i];
  Image p = r;
  double rr = dotp(r, r);
  for (int it = 0; it < iterations && rr > 1e-20; ++it) {
    const Image ap = apply_normal(p);
    const double alpha = rr / dotp(p, ap);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x.data()[i] += alpha * p.data()[i];
      r.data()[i] -= alpha * ap.data()[i];
    }
    const double rr_next = dotp(r, r);
    for (std::size_t i = 0; i < p.size(); ++i) p.data()[i] = r.data()[i] + rr_next / rr * p.data()[i];
    rr = rr_next;
  }
  return x.clamp();
}

inline Image unsharp(const Image& img, const Kernel& blur, double amount) {
  const Image soft = correlate_raw(img, blur);
  Image out = img;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += amount * (img.data()[i] - soft.data()[i]);
  return out.clamp();
}

inline Image invert_motion_blur(const DistortionSpec& s, const Image& img, const DepthMap* depth) {
  const Image sharp = deconvolve(img, fx::motion_kernel(s));
  const int mask = s.int_param("depth_mask");
  if (mask == 0 || depth == nullptr) return sharp;
  const double tau = s.param("tau_depth");
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double d = (*depth)(y, x);
      if (mask == 1 ? d < tau : d >= tau)
        for (int c = 0; c < img.channels(); ++c) out(y, x, c) = sharp(y, x, c);
    }
  return out;
}

/// Angle (one of the four forward directions) with the least gradient energy.
inline int estimate_blur_direction(const Image& img) {
  const Image g = to_gray(img);
  double best = 1e300;
  int best_code = 0;
  for (int code = 0; code < 4; ++code) {
    const double th = fx::direction_angle(code);
    const double ux = std::cos(th), uy = std::sin(th);
    double e = 0.0;
    for (int y = 1; y + 1 < g.height(); ++y)
      for (int x = 1; x + 1 < g.width(); ++x) {
        const double d = sample_bilinear(g, y + uy, x + ux, 0) - sample_bilinear(g, y - uy, x - ux, 0);
        e += d * d;
      }
    if (e < best) {
      best = e;
      best_code = code;
    }
  }
  return best_code;
}

/// Number of constant runs along each axis, from the block edges of a pixelated image.
inline std::pair<int, int> estimate_block_grid(const Image& img) {
  auto runs = [&](bool rows) {
    const int n = rows ? img.height() : img.width(), m = rows ? img.width() : img.height();
    int count = 1;
    for (int i = 1; i < n; ++i) {
      bool differs = false;
      for (int j = 0; j < m && !differs; ++j)
        for (int c = 0; c < img.channels() && !differs; ++c)
          differs = rows ? img(i, j, c) != img(i - 1, j, c) : img(j, i, c) != img(j, i - 1, c);
      count += differs ? 1 : 0;
    }
    return count;
  };
  return {runs(true), runs(false)};
}

inline Image unpixelate(const Image& img, int low_h, int low_w) {
  return resize_to(resize_nearest(img, low_h, low_w), img.height(), img.width());
}

inline Image invert_field_warp(const DisplacementField& forward, const Image& img) {
  return warp(img, invert_field(forward, 30));
}

/// Median background with the original detail kept wherever no bright particle is found.
inline Image remove_particles(const Image& img) {
  const Image med = median_filter(img, 2);
  Image out = img;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double excess = luminance(img, y, x) - luminance(med, y, x);
      const double w = fx::smoothstep(0.02, 0.08, excess);
      for (int c = 0; c < img.channels(); ++c) out(y, x, c) = (1.0 - w) * img(y, x, c) + w * med(y, x, c);
    }
  return out.clamp();
}

inline const DepthMap& require_depth(const DepthMap* depth, const Image& img, std::string_view what) {
  if (depth == nullptr || depth->empty())
    throw InvalidArgument(std::string(what) + " inversion requires a depth map");
  detail::require(depth->matches(img), "invert: depth map dimensions do not match image");
  return *depth;
}

}  // namespace inv

/// Blind parameter estimates for `c`, clamped to the forward ranges.
inline InverseHints estimate_hints(Category c, const Image& img) {
  InverseHints h;
  switch (c) {
    case Category::low_light:
      h.estimates["factor"] = std::clamp(inv::luma_percentile(img, 0.99) / 0.95, 0.4, 0.9);
      break;
    case Category::brightness: {
      const double m = std::clamp(inv::mean_luma(img), 1e-3, 1.0 - 1e-3);
      h.estimates["gamma"] = std::clamp(std::log(0.45) / std::log(m), 0.5, 1.5);
      break;
    }
    case Category::contrast: {
      const double range = inv::luma_percentile(img, 0.99) - inv::luma_percentile(img, 0.01);
      h.estimates["factor"] = std::clamp(range / 0.9, 0.4, 1.0);
      break;
    }
    case Category::gaussian_noise: {
      const double frac = inv::impulse_fraction(img);
      h.estimates["mode"] = frac > 0.01 ? 1.0 : 0.0;
      h.estimates["sigma"] = std::clamp(inv::estimate_noise_sigma(img), 0.05, 0.1);
      h.estimates["corruption"] = std::clamp(frac, 0.02, 0.08);
      break;
    }
    case Category::motion_blur:
      h.estimates["direction"] = inv::estimate_blur_direction(img);
      break;
    case Category::pixelation: {
      const auto [bh, bw] = inv::estimate_block_grid(img);
      h.estimates["factor"] = std::clamp(0.5 * (double(img.height()) / bh + double(img.width()) / bw), 2.0, 4.0);
      break;
    }
    default:
      break;
  }
  return h;
}

/// Approximate inverse of category `c`. Oracle hints give parameter-exact
/// inverses; otherwise the blind estimates in `hints` are used. Warnings are
/// appended for inverses that degrade to a no-op or fallback.
inline Image invert(Category c, const Image& img, const InverseHints& hints, const DepthMap* depth = nullptr,
                    std::vector<std::string>* warnings = nullptr) {
  detail::require(!img.empty(), "invert: empty image");
  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(w);
  };
  Grouping grouping;
  for (const auto& s : hints.specs)
    detail::require(grouping.category(s.kind) == c, "invert: hint spec does not belong to category " +
                                                          std::string(name(c)));
  // Oracle: undo the category's specs in reverse application order.
  if (hints.oracle()) {
    Image out = img;
    for (auto it = hints.specs.rbegin(); it != hints.specs.rend(); ++it) {
      const auto& s = *it;
      using K = DistortionKind;
      switch (s.kind) {
        case K::low_light: out = inv::scale(out, 1.0 / s.param("factor")); break;
        case K::overexposure: out = inv::invert_overexposure(s, out); break;
        case K::underexposure: out = inv::invert_underexposure(s, out); break;
        case K::contrast: out = inv::invert_contrast(out, s.param("factor")); break;
        case K::saturation: out = inv::invert_saturation(out, s.param("factor")); break;
        case K::color_jitter: out = inv::invert_color_jitter(s, out); break;
        case K::haze:
          if (depth == nullptr || depth->empty()) {
            warn("haze: no depth map, using global airlight estimate");
            out = inv::dehaze_dark_channel(out);
          } else {
            out = inv::invert_haze(out, inv::require_depth(depth, out, "haze"), s.param("alpha"));
          }
          break;
        case K::clouds: out = inv::invert_clouds(s, out); break;
        case K::gaussian_noise:
          out = s.int_param("mode") == 1 ? inv::remove_impulses(out).clamp()
                                         : inv::denoise_gaussian(out, s.param("sigma"));
          break;
        case K::defocus_blur: {
          const int k = s.int_param("kernel_size");
          out = inv::deconvolve(out, gaussian_kernel(fx::defocus_sigma(k), k));
          break;
        }
        case K::motion_blur: out = inv::invert_motion_blur(s, out, depth); break;
        case K::pixelation: {
          const double f = s.param("factor");
          out = inv::unpixelate(out, std::max(1, static_cast<int>(std::lround(out.height() / f))),
                                std::max(1, static_cast<int>(std::lround(out.width() / f))));
          break;
        }
        case K::elastic_warp:
          out = inv::invert_field_warp(fx::elastic_field(s, out.height(), out.width()), out).clamp();
          break;
        case K::refraction:
          out = inv::invert_field_warp(fx::refraction_field(s, out.height(), out.width()), out).clamp();
          break;
        case K::rain:
        case K::snow:
        case K::raindrops: out = inv::remove_particles(out); break;
      }
    }
    return out;
  }

  const InverseHints est = hints.estimates.empty() ? estimate_hints(c, img) : hints;
  switch (c) {
    case Category::low_light: return inv::scale(img, 1.0 / est.estimate("factor", 0.65));
    case Category::brightness: {
      Image out = img;
      const double g = est.estimate("gamma", 1.0);
      for (double& v : out.data()) v = std::pow(v, g);
      return out.clamp();
    }
    case Category::contrast: return inv::invert_contrast(img, est.estimate("factor", 1.0));
    case Category::color_shift: return inv::gray_world(img);
    case Category::haze:
    case Category::clouds: return inv::dehaze_dark_channel(img);
    case Category::gaussian_noise:
      return est.estimate("mode", 0.0) == 1.0 ? inv::remove_impulses(img).clamp()
                                               : inv::denoise_gaussian(img, est.estimate("sigma", 0.075));
    case Category::defocus_blur: return inv::unsharp(img, gaussian_kernel(1.5, 7), 1.0);
    case Category::motion_blur: {
      const double th = fx::direction_angle(static_cast<int>(est.estimate("direction", 0.0)));
      return inv::unsharp(img, fx::line_kernel(7, th), 1.0);
    }
    case Category::pixelation: {
      const double f = est.estimate("factor", 3.0);
      return inv::unpixelate(img, std::max(1, static_cast<int>(std::lround(img.height() / f))),
                             std::max(1, static_cast<int>(std::lround(img.width() / f))));
    }
    case Category::rain:
    case Category::snow: return inv::remove_particles(img);
    case Category::elastic_warp:
    case Category::refraction:
      warn(std::string(name(c)) + ": blind inverse unavailable, left unchanged");
      return img;
  }
  throw InvalidArgument("invert: unregistered category");
}

}  // namespace prism

#endif
