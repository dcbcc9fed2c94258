#ifndef PRISM_CORE_RESIZE_HPP
#define PRISM_CORE_RESIZE_HPP

#include <array>
#include <cmath>

#include "prism/core/error.hpp"
#include "prism/core/filters.hpp"
#include "prism/core/image.hpp"

namespace prism {

/// Keys cubic convolution weight with a = -0.5.
inline double cubic_weight(double t) noexcept {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

/// Bicubic resampling to an explicit size, pixel-center aligned, edge-clamped.
inline Image resize_to(const Image& img, int height, int width) {
  detail::require(height >= 1 && width >= 1, "resize: resulting dimensions must be >= 1");
  detail::require(!img.empty(), "resize: empty image");
  const int H = img.height(), W = img.width(), C = img.channels();
  if (height == H && width == W) return img;
  const double sy = static_cast<double>(H) / height, sx = static_cast<double>(W) / width;
  Image out(height, width, C);
  for (int y = 0; y < height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int iy = static_cast<int>(std::floor(fy));
    const double ty = fy - iy;
    std::array<double, 4> wy{};
    for (int m = -1; m <= 2; ++m) wy[m + 1] = cubic_weight(m - ty);
    for (int x = 0; x < width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int ix = static_cast<int>(std::floor(fx));
      const double tx = fx - ix;
      std::array<double, 4> wx{};
      for (int n = -1; n <= 2; ++n) wx[n + 1] = cubic_weight(n - tx);
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int m = -1; m <= 2; ++m) {
          const int yy = clamp_index(iy + m, H);
          double row = 0.0;
          for (int n = -1; n <= 2; ++n) row += wx[n + 1] * img(yy, clamp_index(ix + n, W), c);
          acc += wy[m + 1] * row;
        }
        out(y, x, c) = acc;
      }
    }
  }
  return out.clamp();
}

inline Image resize(const Image& img, double factor) {
  detail::require(factor > 0.0 && std::isfinite(factor), "resize: factor must be positive");
  if (factor == 1.0) return img;
  const int h = static_cast<int>(std::lround(img.height() * factor));
  const int w = static_cast<int>(std::lround(img.width() * factor));
  return resize_to(img, h, w);
}

/// Nearest-neighbour resampling (used to render blocky pixelation).
inline Image resize_nearest(const Image& img, int height, int width) {
  detail::require(height >= 1 && width >= 1, "resize: resulting dimensions must be >= 1");
  const int H = img.height(), W = img.width(), C = img.channels();
  Image out(height, width, C);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(H - 1, static_cast<int>((y + 0.5) * H / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(W - 1, static_cast<int>((x + 0.5) * W / width));
      for (int c = 0; c < C; ++c) out(y, x, c) = img(sy, sx, c);
    }
  }
  return out;
}

}  // namespace prism

#endif
