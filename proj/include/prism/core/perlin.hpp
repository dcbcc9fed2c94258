#ifndef PRISM_CORE_PERLIN_HPP
#define PRISM_CORE_PERLIN_HPP

#include <cmath>
#include <numbers>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/image.hpp"
#include "prism/core/rng.hpp"

namespace prism {

/// Single-octave gradient (Perlin) noise with a lattice cell of `scale` pixels.
/// Raw noise lies in [-sqrt(2)/2, sqrt(2)/2]; it is mapped affinely onto [0,1].
inline Image perlin_noise(int height, int width, double scale, SeededRng& rng) {
  detail::require(height >= 1 && width >= 1, "perlin_noise: zero dimensions");
  detail::require(scale >= 1.0, "perlin_noise: scale must be >= 1");
  const int gh = static_cast<int>(std::ceil(height / scale)) + 2;
  const int gw = static_cast<int>(std::ceil(width / scale)) + 2;
  std::vector<double> gx(static_cast<std::size_t>(gh) * gw), gy(gx.size());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    gx[i] = std::cos(a);
    gy[i] = std::sin(a);
  }
  auto fade = [](double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); };
  auto dot = [&](int cy, int cx, double py, double px) {
    const std::size_t i = static_cast<std::size_t>(cy) * gw + cx;
    return gx[i] * (px - cx) + gy[i] * (py - cy);
  };
  const double norm = std::sqrt(2.0);
  Image out(height, width, 1);
  for (int y = 0; y < height; ++y) {
    const double py = (y + 0.5) / scale;
    const int y0 = static_cast<int>(std::floor(py));
    const double ty = fade(py - y0);
    for (int x = 0; x < width; ++x) {
      const double px = (x + 0.5) / scale;
      const int x0 = static_cast<int>(std::floor(px));
      const double tx = fade(px - x0);
      const double n00 = dot(y0, x0, py, px), n01 = dot(y0, x0 + 1, py, px);
      const double n10 = dot(y0 + 1, x0, py, px), n11 = dot(y0 + 1, x0 + 1, py, px);
      const double top = n00 + tx * (n01 - n00);
      const double bot = n10 + tx * (n11 - n10);
      const double v = top + ty * (bot - top);
      out(y, x) = clamp_unit(0.5 + 0.5 * norm * v);
    }
  }
  return out;
}

/// Sum of octaves with halving scale and amplitude, renormalized to [0,1].
inline Image fractal_noise(int height, int width, double scale, int octaves, SeededRng& rng) {
  Image acc(height, width, 1);
  std::vector<double> sum(acc.size(), 0.0);
  double amp = 1.0, s = scale;
  for (int o = 0; o < octaves; ++o) {
    const Image layer = perlin_noise(height, width, std::max(1.0, s), rng);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += amp * layer.data()[i];
    amp *= 0.5;
    s *= 0.5;
  }
  double lo = 1e300, hi = -1e300;
  for (double v : sum) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double span = hi - lo > 1e-12 ? hi - lo : 1.0;
  for (std::size_t i = 0; i < sum.size(); ++i) acc.data()[i] = (sum[i] - lo) / span;
  return acc;
}

}  // namespace prism

#endif
