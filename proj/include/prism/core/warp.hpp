#ifndef PRISM_CORE_WARP_HPP
#define PRISM_CORE_WARP_HPP

#include <cmath>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/filters.hpp"
#include "prism/core/image.hpp"

namespace prism {

/// Per-pixel sampling offsets: output(y, x) reads input at (y + dy, x + dx).
struct DisplacementField {
  int height = 0;
  int width = 0;
  std::vector<double> dx;
  std::vector<double> dy;

  DisplacementField() = default;
  DisplacementField(int h, int w)
      : height(h), width(w), dx(static_cast<std::size_t>(h) * w, 0.0), dy(static_cast<std::size_t>(h) * w, 0.0) {}

  std::size_t at(int y, int x) const noexcept { return static_cast<std::size_t>(y) * width + x; }

  double max_magnitude() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) m = std::max(m, std::hypot(dx[i], dy[i]));
    return m;
  }
};

/// Bilinear sample with edge clamping.
inline double sample_bilinear(const Image& img, double y, double x, int c) noexcept {
  const int H = img.height(), W = img.width();
  const double fy = std::floor(y), fx = std::floor(x);
  const double ty = y - fy, tx = x - fx;
  const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
  const int ya = clamp_index(y0, H), yb = clamp_index(y0 + 1, H);
  const int xa = clamp_index(x0, W), xb = clamp_index(x0 + 1, W);
  const double top = img(ya, xa, c) * (1.0 - tx) + img(ya, xb, c) * tx;
  const double bot = img(yb, xa, c) * (1.0 - tx) + img(yb, xb, c) * tx;
  return top * (1.0 - ty) + bot * ty;
}

inline Image warp(const Image& img, const DisplacementField& field) {
  detail::require(field.height == img.height() && field.width == img.width(),
                  "warp: displacement field dimensions do not match image");
  const int H = img.height(), W = img.width(), C = img.channels();
  Image out(H, W, C);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const std::size_t i = field.at(y, x);
      for (int c = 0; c < C; ++c) out(y, x, c) = sample_bilinear(img, y + field.dy[i], x + field.dx[i], c);
    }
  return out.clamp();
}

/// Approximate inverse field by fixed-point iteration v(p) = -u(p + v(p)).
inline DisplacementField invert_field(const DisplacementField& u, int iterations = 20) {
  DisplacementField v(u.height, u.width);
  Image ux(u.height, u.width, 1), uy(u.height, u.width, 1);
  std::copy(u.dx.begin(), u.dx.end(), ux.data().begin());
  std::copy(u.dy.begin(), u.dy.end(), uy.data().begin());
  for (int it = 0; it < iterations; ++it) {
    DisplacementField next(u.height, u.width);
    for (int y = 0; y < u.height; ++y)
      for (int x = 0; x < u.width; ++x) {
        const std::size_t i = v.at(y, x);
        const double sy = y + v.dy[i], sx = x + v.dx[i];
        next.dx[i] = -sample_bilinear(ux, sy, sx, 0);
        next.dy[i] = -sample_bilinear(uy, sy, sx, 0);
      }
    v = std::move(next);
  }
  return v;
}

}  // namespace prism

#endif
