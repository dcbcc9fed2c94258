#ifndef PRISM_CORE_IMAGE_HPP
#define PRISM_CORE_IMAGE_HPP

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "prism/core/error.hpp"

namespace prism {

constexpr double clamp_unit(double v) noexcept { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

/// H x W x C raster of unit-interval intensities, row-major, channels interleaved.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0)
      : height_(height), width_(width), channels_(channels) {
    detail::require(height >= 0 && width >= 0, "Image: negative dimensions");
    detail::require(channels == 1 || channels == 3, "Image: channels must be 1 or 3");
    data_.assign(static_cast<std::size_t>(height) * width * channels, clamp_unit(fill));
  }

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(height_) * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int y, int x, int c = 0) noexcept { return data_[index(y, x, c)]; }
  double operator()(int y, int x, int c = 0) const noexcept { return data_[index(y, x, c)]; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const Image& o) const noexcept {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  /// Enforces the unit-interval invariant; every public op calls this on its output.
  Image& clamp() noexcept {
    for (double& v : data_) v = clamp_unit(v);
    return *this;
  }

  bool operator==(const Image& o) const = default;

 private:
  std::size_t index(int y, int x, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

/// Normalized depth, 1 = farthest.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int height, int width, double fill = 0.0)
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * width, clamp_unit(fill)) {}

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  bool empty() const noexcept { return data_.empty(); }
  double& operator()(int y, int x) noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  double operator()(int y, int x) const noexcept { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool matches(const Image& img) const noexcept {
    return height_ == img.height() && width_ == img.width();
  }

  DepthMap& clamp() noexcept {
    for (double& v : data_) v = clamp_unit(v);
    return *this;
  }

  bool operator==(const DepthMap& o) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Rec. 601 luma of pixel (y, x); identity for single-channel images.
inline double luminance(const Image& img, int y, int x) noexcept {
  if (img.channels() == 1) return img(y, x, 0);
  return 0.299 * img(y, x, 0) + 0.587 * img(y, x, 1) + 0.114 * img(y, x, 2);
}

inline Image to_gray(const Image& img) {
  Image out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out(y, x) = luminance(img, y, x);
  return out;
}

inline double mean_value(const Image& img) {
  if (img.empty()) return 0.0;
  double s = 0.0;
  for (double v : img.data()) s += v;
  return s / static_cast<double>(img.size());
}

}  // namespace prism

#endif
