#ifndef PRISM_EVAL_METRICS_HPP
#define PRISM_EVAL_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include <json.hpp>

#include "prism/core/error.hpp"
#include "prism/core/image.hpp"
#include "prism/distortions/labels.hpp"

namespace prism {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

inline double mse(const Image& a, const Image& b) {
  detail::require(a.same_shape(b), "mse: dimension mismatch");
  detail::require(!a.empty(), "mse: empty image");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

/// Peak signal-to-noise ratio with peak 1; zero error reports kPsnrCap.
inline double psnr(const Image& reference, const Image& candidate) {
  const double m = mse(reference, candidate);
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, -10.0 * std::log10(m));
}

/// Gaussian-window SSIM averaged over all fully contained windows and channels.
inline double ssim(const Image& reference, const Image& candidate) {
  detail::require(reference.same_shape(candidate), "ssim: dimension mismatch");
  detail::require(reference.height() >= kSsimWindow && reference.width() >= kSsimWindow,
                  "ssim: image smaller than the 11x11 window");
  constexpr int r = kSsimWindow / 2;
  std::vector<double> w(kSsimWindow);
  double wsum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    w[i] = std::exp(-0.5 * (i - r) * (i - r) / (kSsimSigma * kSsimSigma));
    wsum += w[i];
  }
  for (double& v : w) v /= wsum;

  const int h = reference.height(), wd = reference.width(), ch = reference.channels();
  double total = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < ch; ++c)
    for (int y = r; y < h - r; ++y)
      for (int x = r; x < wd - r; ++x) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int dy = -r; dy <= r; ++dy)
          for (int dx = -r; dx <= r; ++dx) {
            const double k = w[dy + r] * w[dx + r];
            const double a = reference(y + dy, x + dx, c), b = candidate(y + dy, x + dx, c);
            mx += k * a;
            my += k * b;
            sxx += k * a * a;
            syy += k * b * b;
            sxy += k * a * b;
          }
        const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
        total += ((2 * mx * my + kSsimC1) * (2 * cxy + kSsimC2)) /
                 ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
        ++count;
      }
  return total / static_cast<double>(count);
}

struct MetricReport {
  std::vector<double> psnr;
  std::vector<double> ssim;

  void add(const Image& reference, const Image& candidate) {
    psnr.push_back(prism::psnr(reference, candidate));
    ssim.push_back(prism::ssim(reference, candidate));
  }
  std::size_t count() const noexcept { return psnr.size(); }
  static double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  }
  double mean_psnr() const { return mean(psnr); }
  double mean_ssim() const { return mean(ssim); }
  std::size_t capped() const { return static_cast<std::size_t>(std::count(psnr.begin(), psnr.end(), kPsnrCap)); }

  nlohmann::json to_json() const {
    return {{"count", count()}, {"mean_psnr", mean_psnr()}, {"mean_ssim", mean_ssim()}, {"psnr_capped", capped()},
            {"psnr", psnr}, {"ssim", ssim}};
  }
};

struct F1Counts {
  std::size_t tp = 0, fp = 0, fn = 0;

  void add(const LabelSet& predicted, const LabelSet& truth) {
    tp += (predicted & truth).size();
    fp += (predicted - truth).size();
    fn += (truth - predicted).size();
  }
  /// Micro-averaged F1 over categories; 1 when nothing was predicted or expected.
  double f1() const {
    const std::size_t d = 2 * tp + fp + fn;
    return d == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(d);
  }
  double precision() const { return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
};

}  // namespace prism

#endif
