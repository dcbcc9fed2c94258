#ifndef PRISM_CORE_FILTERS_HPP
#define PRISM_CORE_FILTERS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/image.hpp"

namespace prism {

/// Odd-sized 2D correlation kernel, row-major.
struct Kernel {
  int rows = 1;
  int cols = 1;
  std::vector<double> weights{1.0};

  double operator()(int r, int c) const noexcept { return weights[static_cast<std::size_t>(r) * cols + c]; }
  double sum() const noexcept {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
};

/// Symmetric ("dcba|abcd|dcba") boundary reflection, valid for any offset.
inline int reflect_index(int i, int n) noexcept {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

inline int clamp_index(int i, int n) noexcept { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

inline std::vector<double> gaussian_kernel_1d(double sigma, int size) {
  detail::require(size >= 1 && size % 2 == 1, "gaussian kernel size must be odd and >= 1");
  detail::require(sigma > 0.0 && std::isfinite(sigma), "gaussian kernel sigma must be positive");
  const int r = size / 2;
  std::vector<double> k(static_cast<std::size_t>(size));
  double s = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    s += k[static_cast<std::size_t>(i + r)];
  }
  for (double& v : k) v /= s;
  return k;
}

inline Kernel gaussian_kernel(double sigma, int size) {
  const auto k1 = gaussian_kernel_1d(sigma, size);
  Kernel k{size, size, std::vector<double>(static_cast<std::size_t>(size) * size)};
  double s = 0.0;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      k.weights[static_cast<std::size_t>(r) * size + c] = k1[r] * k1[c];
      s += k1[r] * k1[c];
    }
  for (double& v : k.weights) v /= s;
  return k;
}

/// Kernel size covering +-3 sigma.
inline int gaussian_size_for(double sigma) { return 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1; }

namespace detail {
inline void check_kernel(const Kernel& k) {
  require(k.rows >= 1 && k.cols >= 1 && k.rows % 2 == 1 && k.cols % 2 == 1, "kernel must be odd-sized");
  require(k.weights.size() == static_cast<std::size_t>(k.rows) * k.cols, "kernel weight count mismatch");
}

struct Tap {
  int i, j;
  double w;
};

inline std::vector<Tap> nonzero_taps(const Kernel& k) {
  std::vector<Tap> taps;
  for (int i = 0; i < k.rows; ++i)
    for (int j = 0; j < k.cols; ++j)
      if (k(i, j) != 0.0) taps.push_back({i, j, k(i, j)});
  return taps;
}

/// table[p * (2r+1) + t] = reflect_index(p + t - r, n)
inline std::vector<int> reflect_table(int n, int r) {
  std::vector<int> t(static_cast<std::size_t>(n) * (2 * r + 1));
  for (int p = 0; p < n; ++p)
    for (int o = 0; o <= 2 * r; ++o) t[static_cast<std::size_t>(p) * (2 * r + 1) + o] = reflect_index(p + o - r, n);
  return t;
}
}  // namespace detail

/// Unclamped correlation with reflected borders. Used by linear solvers that
/// need the raw operator; public callers want convolve2d.
inline Image correlate_raw(const Image& img, const Kernel& k) {
  detail::check_kernel(k);
  const int H = img.height(), W = img.width(), C = img.channels();
  const auto taps = detail::nonzero_taps(k);
  const auto ys = detail::reflect_table(H, k.rows / 2), xs = detail::reflect_table(W, k.cols / 2);
  const int ry = 2 * (k.rows / 2) + 1, rx = 2 * (k.cols / 2) + 1;
  Image out(H, W, C);
  auto od = out.data();
  const auto id = img.data();
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (const auto& t : taps) {
          const int sy = ys[static_cast<std::size_t>(y) * ry + t.i], sx = xs[static_cast<std::size_t>(x) * rx + t.j];
          acc += t.w * id[(static_cast<std::size_t>(sy) * W + sx) * C + c];
        }
        od[(static_cast<std::size_t>(y) * W + x) * C + c] = acc;
      }
  return out;
}

/// Adjoint of correlate_raw (including the reflection fold-back).
inline Image correlate_adjoint_raw(const Image& img, const Kernel& k) {
  detail::check_kernel(k);
  const int H = img.height(), W = img.width(), C = img.channels();
  const auto taps = detail::nonzero_taps(k);
  const auto ys = detail::reflect_table(H, k.rows / 2), xs = detail::reflect_table(W, k.cols / 2);
  const int ry = 2 * (k.rows / 2) + 1, rx = 2 * (k.cols / 2) + 1;
  std::vector<double> acc(img.size(), 0.0);
  const auto id = img.data();
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        const double g = id[(static_cast<std::size_t>(y) * W + x) * C + c];
        for (const auto& t : taps) {
          const int sy = ys[static_cast<std::size_t>(y) * ry + t.i], sx = xs[static_cast<std::size_t>(x) * rx + t.j];
          acc[(static_cast<std::size_t>(sy) * W + sx) * C + c] += t.w * g;
        }
      }
  Image out(H, W, C);
  std::copy(acc.begin(), acc.end(), out.data().begin());
  return out;
}

/// 2D filtering with reflected borders ("edge_mode: reflect"). Output is clamped to [0,1].
inline Image convolve2d(const Image& img, const Kernel& k) {
  detail::require(!img.empty(), "convolve2d: empty image");
  Image out = correlate_raw(img, k);
  return out.clamp();
}

/// Separable filtering: rows with `kx`, then columns with `ky`. Unclamped.
inline Image separable_raw(const Image& img, const std::vector<double>& kx, const std::vector<double>& ky) {
  detail::require(kx.size() % 2 == 1 && ky.size() % 2 == 1, "separable kernels must be odd-sized");
  const int H = img.height(), W = img.width(), C = img.channels();
  const int rx = static_cast<int>(kx.size()) / 2, ry = static_cast<int>(ky.size()) / 2;
  const auto xs = detail::reflect_table(W, rx), ys = detail::reflect_table(H, ry);
  const auto nx = static_cast<std::size_t>(2 * rx + 1), ny = static_cast<std::size_t>(2 * ry + 1);
  Image tmp(H, W, C), out(H, W, C);
  auto td = tmp.data();
  auto od = out.data();
  const auto id = img.data();
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        const std::size_t row = static_cast<std::size_t>(y) * W;
        for (std::size_t j = 0; j < nx; ++j) acc += kx[j] * id[(row + xs[x * nx + j]) * C + c];
        td[(row + x) * C + c] = acc;
      }
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < ny; ++i)
          acc += ky[i] * td[(static_cast<std::size_t>(ys[y * ny + i]) * W + x) * C + c];
        od[(static_cast<std::size_t>(y) * W + x) * C + c] = acc;
      }
  return out;
}

inline Image gaussian_blur(const Image& img, double sigma) {
  detail::require(!img.empty(), "gaussian_blur: empty image");
  const auto k = gaussian_kernel_1d(sigma, gaussian_size_for(sigma));
  return separable_raw(img, k, k).clamp();
}

/// Blur of a raw scalar field (no clamping); used for displacement fields.
inline std::vector<double> gaussian_blur_field(const std::vector<double>& field, int height, int width,
                                               double sigma) {
  Image f(height, width, 1);
  std::copy(field.begin(), field.end(), f.data().begin());
  const auto k = gaussian_kernel_1d(sigma, gaussian_size_for(sigma));
  const Image tmp = separable_raw(f, k, k);
  return {tmp.data().begin(), tmp.data().end()};
}

/// Per-channel median over a (2r+1)^2 window with reflected borders.
inline Image median_filter(const Image& img, int radius) {
  detail::require(radius >= 0, "median_filter: negative radius");
  const int H = img.height(), W = img.width(), C = img.channels();
  Image out(H, W, C);
  std::vector<double> win;
  win.reserve(static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1)));
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < C; ++c) {
        win.clear();
        for (int i = -radius; i <= radius; ++i)
          for (int j = -radius; j <= radius; ++j)
            win.push_back(img(reflect_index(y + i, H), reflect_index(x + j, W), c));
        auto mid = win.begin() + static_cast<std::ptrdiff_t>(win.size() / 2);
        std::nth_element(win.begin(), mid, win.end());
        out(y, x, c) = *mid;
      }
  return out;
}

/// Minimum over channels followed by a (2r+1)^2 spatial minimum (the dark channel).
inline Image dark_channel(const Image& img, int radius) {
  const int H = img.height(), W = img.width(), C = img.channels();
  Image mins(H, W, 1), out(H, W, 1);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double m = 1.0;
      for (int c = 0; c < C; ++c) m = std::min(m, img(y, x, c));
      mins(y, x) = m;
    }
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double m = 1.0;
      for (int i = -radius; i <= radius; ++i)
        for (int j = -radius; j <= radius; ++j)
          m = std::min(m, mins(clamp_index(y + i, H), clamp_index(x + j, W)));
      out(y, x) = m;
    }
  return out;
}

}  // namespace prism

#endif
