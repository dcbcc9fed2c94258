#ifndef PRISM_EMBEDDING_FEATURES_HPP
#define PRISM_EMBEDDING_FEATURES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/filters.hpp"
#include "prism/core/image.hpp"

namespace prism {

// Fixed (untrained) descriptor that the trainable encoder sits on. Each block
// targets a family of degradations; the thumbnail carries scene content.
namespace feat {

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  const auto k = static_cast<std::size_t>(std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1));
  std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
  return v[k];
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double stddev(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return v.empty() ? 0.0 : std::sqrt(s / static_cast<double>(v.size()));
}

struct Plane {
  int h, w;
  std::vector<double> v;
  double operator()(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

inline Plane luma_plane(const Image& img) {
  Plane p{img.height(), img.width(), std::vector<double>(img.pixels())};
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < p.w; ++x) p.v[static_cast<std::size_t>(y) * p.w + x] = luminance(img, y, x);
  return p;
}

/// Pearson correlation of two aligned samples; 0 when either is constant.
inline double lag_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return saa > 1e-12 && sbb > 1e-12 ? sab / std::sqrt(saa * sbb) : 0.0;
}

/// Mean-pools by an integer factor.
inline Plane pool(const Plane& p, int k) {
  Plane out{p.h / k, p.w / k, std::vector<double>(static_cast<std::size_t>(p.h / k) * (p.w / k))};
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) s += p(y * k + i, x * k + j);
      out.v[static_cast<std::size_t>(y) * out.w + x] = s / (k * k);
    }
  return out;
}

/// Robust noise scale from the diagonal detail band.
inline double mad_noise(const Plane& p) {
  std::vector<double> hh;
  for (int y = 0; y + 1 < p.h; y += 2)
    for (int x = 0; x + 1 < p.w; x += 2) hh.push_back(std::abs(p(y, x) - p(y, x + 1) - p(y + 1, x) + p(y + 1, x + 1)) / 2.0);
  return quantile(hh, 0.5) / 0.6745;
}

/// Mean |laplacian| over mean |gradient|; lower for smoother images.
inline double sharpness(const Plane& p) {
  double lap = 0, grad = 0;
  int n = 0;
  for (int y = 1; y + 1 < p.h; ++y)
    for (int x = 1; x + 1 < p.w; ++x, ++n) {
      lap += std::abs(4 * p(y, x) - p(y - 1, x) - p(y + 1, x) - p(y, x - 1) - p(y, x + 1));
      grad += std::hypot(p(y, x + 1) - p(y, x), p(y + 1, x) - p(y, x));
    }
  return n ? lap / (grad + 1e-3) : 0.0;
}

/// Mean absolute first difference per column (axis 0) or per row (axis 1).
inline std::vector<double> difference_profile(const Plane& p, int axis) {
  std::vector<double> prof;
  if (axis == 0) {
    prof.assign(static_cast<std::size_t>(p.w - 1), 0.0);
    for (int y = 0; y < p.h; ++y)
      for (int x = 0; x + 1 < p.w; ++x) prof[x] += std::abs(p(y, x + 1) - p(y, x)) / p.h;
  } else {
    prof.assign(static_cast<std::size_t>(p.h - 1), 0.0);
    for (int y = 0; y + 1 < p.h; ++y)
      for (int x = 0; x < p.w; ++x) prof[y] += std::abs(p(y + 1, x) - p(y, x)) / p.w;
  }
  return prof;
}

inline double autocorrelation(const std::vector<double>& v, std::size_t lag) {
  if (v.size() <= lag + 1) return 0.0;
  return lag_correlation(std::vector<double>(v.begin(), v.end() - static_cast<long>(lag)),
                         std::vector<double>(v.begin() + static_cast<long>(lag), v.end()));
}

}  // namespace feat

inline constexpr std::size_t kFeatureDim = 112;

inline std::vector<double> extract_features(const Image& img) {
  using namespace feat;
  detail::require(img.height() >= 8 && img.width() >= 8, "extract_features: image must be at least 8x8");
  const int H = img.height(), W = img.width(), C = img.channels();
  std::vector<double> f;
  f.reserve(kFeatureDim);
  const Plane L = luma_plane(img);

  // Content: 4x4 block means of luma.
  for (int by = 0; by < 4; ++by)
    for (int bx = 0; bx < 4; ++bx) {
      double s = 0;
      int n = 0;
      for (int y = by * H / 4; y < (by + 1) * H / 4; ++y)
        for (int x = bx * W / 4; x < (bx + 1) * W / 4; ++x, ++n) s += L(y, x);
      f.push_back(s / n);
    }

  // Color statistics.
  std::vector<std::vector<double>> ch(3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) ch[c].push_back(img(y, x, C == 3 ? c : 0));
  for (int c = 0; c < 3; ++c) f.push_back(mean(ch[c]));
  for (int c = 0; c < 3; ++c) f.push_back(stddev(ch[c]));

  // Tonal distribution.
  for (double q : {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99}) f.push_back(quantile(L.v, q));
  std::vector<double> hist(8, 0.0);
  for (double v : L.v) hist[std::min<std::size_t>(7, static_cast<std::size_t>(v * 8))] += 1.0 / L.v.size();
  f.insert(f.end(), hist.begin(), hist.end());

  // Chroma and saturation, overall and by vertical thirds.
  std::vector<double> chroma(img.pixels()), sat(img.pixels()), darkpx(img.pixels());
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    const double r = ch[0][i], g = ch[1][i], b = ch[2][i];
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    chroma[i] = mx - mn;
    sat[i] = mx > 1e-6 ? (mx - mn) / mx : 0.0;
    darkpx[i] = mn;
  }
  f.push_back(mean(chroma));
  f.push_back(stddev(chroma));
  f.push_back(mean(sat));

  // Dark channel (5x5 minimum of the per-pixel channel minimum).
  const Image dc = dark_channel(img, 2);
  std::vector<double> dcv(dc.data().begin(), dc.data().end());
  f.push_back(mean(dcv));
  f.push_back(quantile(dcv, 0.9));

  // Vertical thirds: haze and fog grow with depth, which is largest at the top.
  auto band = [&](const std::vector<double>& v, int t) {
    std::vector<double> out;
    for (int y = t * H / 3; y < (t + 1) * H / 3; ++y)
      for (int x = 0; x < W; ++x) out.push_back(v[static_cast<std::size_t>(y) * W + x]);
    return out;
  };
  for (const std::vector<double>* v : std::array<const std::vector<double>*, 3>{&L.v, &dcv, &sat}) {
    const auto top = band(*v, 0), bottom = band(*v, 2);
    f.push_back(mean(top) - mean(bottom));
    f.push_back(stddev(top) - stddev(bottom));
  }
  f.push_back(mean(band(dcv, 0)));
  f.push_back(stddev(band(L.v, 0)));

  // Directional gradients.
  std::vector<double> gx, gy, gd, ga, gm;
  for (int y = 0; y + 1 < H; ++y)
    for (int x = 0; x + 1 < W; ++x) {
      const double dx = L(y, x + 1) - L(y, x), dy = L(y + 1, x) - L(y, x);
      gx.push_back(std::abs(dx));
      gy.push_back(std::abs(dy));
      gd.push_back(std::abs(L(y + 1, x + 1) - L(y, x)));
      ga.push_back(std::abs(L(y + 1, x) - L(y, x + 1)));
      gm.push_back(std::hypot(dx, dy));
    }
  const double mgx = mean(gx), mgy = mean(gy);
  f.push_back(mgx);
  f.push_back(mgy);
  f.push_back(mean(gd));
  f.push_back(mean(ga));
  f.push_back(quantile(gm, 0.9));
  f.push_back((mgx - mgy) / (mgx + mgy + 1e-6));

  // Second-order energy and its ratio to first order (blur lowers the ratio).
  std::vector<double> lap;
  for (int y = 1; y + 1 < H; ++y)
    for (int x = 1; x + 1 < W; ++x)
      lap.push_back(std::abs(4 * L(y, x) - L(y - 1, x) - L(y + 1, x) - L(y, x - 1) - L(y, x + 1)));
  const double mlap = mean(lap);
  f.push_back(mlap);
  f.push_back(mlap / (mean(gm) + 1e-3));

  // Same at half resolution.
  Plane half{H / 2, W / 2, std::vector<double>(static_cast<std::size_t>(H / 2) * (W / 2))};
  for (int y = 0; y < half.h; ++y)
    for (int x = 0; x < half.w; ++x)
      half.v[static_cast<std::size_t>(y) * half.w + x] =
          0.25 * (L(2 * y, 2 * x) + L(2 * y + 1, 2 * x) + L(2 * y, 2 * x + 1) + L(2 * y + 1, 2 * x + 1));
  std::vector<double> lap2;
  for (int y = 1; y + 1 < half.h; ++y)
    for (int x = 1; x + 1 < half.w; ++x)
      lap2.push_back(std::abs(4 * half(y, x) - half(y - 1, x) - half(y + 1, x) - half(y, x - 1) - half(y, x + 1)));
  f.push_back(mean(lap2));
  f.push_back(mlap / (mean(lap2) + 1e-3));

  // Noise: robust diagonal-detail scale and the floor of local variation.
  std::vector<double> hh;
  for (int y = 0; y + 1 < H; y += 2)
    for (int x = 0; x + 1 < W; x += 2)
      hh.push_back(std::abs(L(y, x) - L(y, x + 1) - L(y + 1, x) + L(y + 1, x + 1)) / 2.0);
  f.push_back(quantile(hh, 0.5) / 0.6745);
  std::vector<double> local_sd;
  for (int y = 1; y + 1 < H; ++y)
    for (int x = 1; x + 1 < W; ++x) {
      double s = 0, s2 = 0;
      for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) {
          s += L(y + i, x + j);
          s2 += L(y + i, x + j) * L(y + i, x + j);
        }
      local_sd.push_back(std::sqrt(std::max(0.0, s2 / 9 - (s / 9) * (s / 9))));
    }
  f.push_back(quantile(local_sd, 0.1));
  f.push_back(quantile(local_sd, 0.3));
  f.push_back(mean(local_sd));

  // Impulses and extremes.
  const Image med = median_filter(img, 1);
  double impulse = 0, lo = 0, hi = 0, bright_spots = 0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      double dev = 0, mn = 1, mx = 0;
      for (int c = 0; c < C; ++c) {
        dev = std::max(dev, std::abs(img(y, x, c) - med(y, x, c)));
        mn = std::min(mn, img(y, x, c));
        mx = std::max(mx, img(y, x, c));
      }
      impulse += dev > 0.3;
      lo += mn < 0.02;
      hi += mx > 0.98;
      bright_spots += luminance(img, y, x) - luminance(med, y, x) > 0.06;
    }
  const double n = static_cast<double>(img.pixels());
  f.push_back(impulse / n);
  f.push_back(lo / n);
  f.push_back(hi / n);
  f.push_back(bright_spots / n);

  // Blockiness: exact repeats between neighbours and within 2x2 cells.
  double zx = 0, zy = 0, zb = 0;
  constexpr double eps = 0.5 / 255.0;
  for (int y = 0; y + 1 < H; ++y)
    for (int x = 0; x + 1 < W; ++x) {
      zx += gx[static_cast<std::size_t>(y) * (W - 1) + x] < eps;
      zy += gy[static_cast<std::size_t>(y) * (W - 1) + x] < eps;
    }
  for (int y = 0; y + 1 < H; y += 2)
    for (int x = 0; x + 1 < W; x += 2) zb += hh[static_cast<std::size_t>(y / 2) * ((W) / 2) + x / 2] < eps;
  const double ng = static_cast<double>((H - 1) * (W - 1));
  f.push_back(zx / ng);
  f.push_back(zy / ng);
  f.push_back(zb / static_cast<double>(hh.size()));

  // Runs of equal horizontal differences: nearest upsampling leaves change points
  // on a regular grid, so the gap between change points has low variance.
  std::vector<double> gaps;
  for (int y = 0; y < H; ++y) {
    int last = -1;
    for (int x = 0; x + 1 < W; ++x)
      if (gx[static_cast<std::size_t>(std::min(y, H - 2)) * (W - 1) + x] >= eps) {
        if (last >= 0) gaps.push_back(x - last);
        last = x;
      }
  }
  f.push_back(gaps.empty() ? 0.0 : mean(gaps));
  f.push_back(gaps.empty() ? 0.0 : stddev(gaps));

  // Autocorrelation of first differences (noise is white, blur correlates them).
  std::vector<double> a0, a1, a2, b0, b1, b2;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x + 3 < W; ++x) {
      const double d0 = L(y, x + 1) - L(y, x), d1 = L(y, x + 2) - L(y, x + 1), d2 = L(y, x + 3) - L(y, x + 2);
      a0.push_back(d0);
      a1.push_back(d1);
      a2.push_back(d2);
    }
  for (int y = 0; y + 3 < H; ++y)
    for (int x = 0; x < W; ++x) {
      b0.push_back(L(y + 1, x) - L(y, x));
      b1.push_back(L(y + 2, x) - L(y + 1, x));
      b2.push_back(L(y + 3, x) - L(y + 2, x));
    }
  f.push_back(lag_correlation(a0, a1));
  f.push_back(lag_correlation(a0, a2));
  f.push_back(lag_correlation(b0, b1));
  f.push_back(lag_correlation(b0, b2));

  // Channel balance relative to luma.
  const double ml = mean(L.v);
  for (int c = 0; c < 3; ++c) f.push_back(mean(ch[c]) - ml);
  f.push_back(quantile(darkpx, 0.05));
  f.push_back(quantile(chroma, 0.95));

  // Block grids leave periodic spikes in the difference profiles that survive
  // later noise or mild blur.
  for (int axis = 0; axis < 2; ++axis) {
    const auto prof = difference_profile(L, axis);
    for (std::size_t lag : {2, 3, 4}) f.push_back(autocorrelation(prof, lag));
    f.push_back(quantile(prof, 0.75) / (quantile(prof, 0.5) + 1e-4));
  }

  // Coarse-scale noise and sharpness, where noise hidden by pixelation or blur remains.
  const Plane p2 = pool(L, 2), p4 = pool(L, 4);
  f.push_back(mad_noise(p2));
  f.push_back(mad_noise(p4));
  f.push_back(sharpness(p2));
  f.push_back(sharpness(p4));

  // Tonal extremes near (bottom) and far (top): haze lifts the far band only.
  for (int t : {0, 2}) {
    const auto b = band(L.v, t);
    f.push_back(quantile(b, 0.02));
    f.push_back(quantile(b, 0.98));
  }

  // Photometric estimates on the median-filtered image, robust to impulses and
  // most additive noise. Clean scenes share fixed luma percentiles and chroma,
  // so slope, offset and chroma ratio track global tone and color changes.
  {
    std::vector<double> ml(img.pixels()), mchroma(img.pixels());
    std::vector<std::vector<double>> mch(3, std::vector<double>(img.pixels()));
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const auto i = static_cast<std::size_t>(y) * W + x;
        ml[i] = luminance(med, y, x);
        for (int c = 0; c < 3; ++c) mch[c][i] = med(y, x, C == 3 ? c : 0);
        mchroma[i] = std::max({mch[0][i], mch[1][i], mch[2][i]}) - std::min({mch[0][i], mch[1][i], mch[2][i]});
      }
    const double q1 = quantile(ml, 0.01), q5 = quantile(ml, 0.05), q50 = quantile(ml, 0.5), q95 = quantile(ml, 0.95),
                 q99 = quantile(ml, 0.99);
    const double range = q99 - q1, slope = range / 0.9, offset = q1 - 0.05 * slope;
    f.push_back(slope);
    f.push_back(offset);
    f.push_back(offset / (mean(ml) + 1e-3));
    f.push_back((q50 - q1) / (range + 1e-3));
    f.push_back((q5 - q1) / (range + 1e-3));
    f.push_back((q99 - q95) / (range + 1e-3));
    f.push_back(mean(mchroma) / (0.25 * slope + 1e-3));
    f.push_back(quantile(mchroma, 0.95) / (slope + 1e-3));
    for (int c = 0; c < 3; ++c) {
      f.push_back(quantile(mch[c], 0.01));
      f.push_back(quantile(mch[c], 0.99));
    }
  }

  if (f.size() != kFeatureDim)
    throw Error("extract_features: produced " + std::to_string(f.size()) + " features, expected " +
                std::to_string(kFeatureDim));
  return f;
}

}  // namespace prism

#endif
