#ifndef PRISM_DISTORTIONS_LABELS_HPP
#define PRISM_DISTORTIONS_LABELS_HPP

#include <array>
#include <bitset>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prism/core/error.hpp"

namespace prism {

/// The seventeen concrete degradation transforms.
enum class DistortionKind : std::uint8_t {
  motion_blur,
  elastic_warp,
  refraction,
  defocus_blur,
  low_light,
  color_jitter,
  overexposure,
  underexposure,
  contrast,
  saturation,
  haze,
  rain,
  snow,
  clouds,
  raindrops,
  gaussian_noise,
  pixelation,
};

inline constexpr std::size_t kNumKinds = 17;

/// The K = 14 label categories seen by prompts, the classifier and the restorer.
enum class Category : std::uint8_t {
  motion_blur,
  elastic_warp,
  refraction,
  defocus_blur,
  low_light,
  brightness,
  color_shift,
  contrast,
  haze,
  rain,
  snow,
  clouds,
  gaussian_noise,
  pixelation,
};

inline constexpr std::size_t kNumCategories = 14;

inline constexpr std::array<std::string_view, kNumKinds> kKindNames = {
    "motion_blur", "elastic_warp", "refraction", "defocus_blur", "low_light", "color_jitter",
    "overexposure", "underexposure", "contrast", "saturation", "haze", "rain",
    "snow", "clouds", "raindrops", "gaussian_noise", "pixelation"};

inline constexpr std::array<std::string_view, kNumCategories> kCategoryNames = {
    "motion_blur", "elastic_warp", "refraction", "defocus_blur", "low_light", "brightness", "color_shift",
    "contrast", "haze", "rain", "snow", "clouds", "gaussian_noise", "pixelation"};

/// Default kind -> category grouping: exposure pair -> brightness, jitter and
/// saturation -> color_shift, raindrops -> rain; the rest map to themselves.
inline constexpr std::array<Category, kNumKinds> kDefaultGrouping = {
    Category::motion_blur, Category::elastic_warp, Category::refraction, Category::defocus_blur,
    Category::low_light,   Category::color_shift,  Category::brightness, Category::brightness,
    Category::contrast,    Category::color_shift,  Category::haze,       Category::rain,
    Category::snow,        Category::clouds,       Category::rain,       Category::gaussian_noise,
    Category::pixelation};

inline constexpr std::string_view name(DistortionKind k) noexcept { return kKindNames[static_cast<std::size_t>(k)]; }
inline constexpr std::string_view name(Category c) noexcept { return kCategoryNames[static_cast<std::size_t>(c)]; }

inline std::optional<DistortionKind> kind_from_name(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kNumKinds; ++i)
    if (kKindNames[i] == s) return static_cast<DistortionKind>(i);
  return std::nullopt;
}

inline std::optional<Category> category_from_name(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kNumCategories; ++i)
    if (kCategoryNames[i] == s) return static_cast<Category>(i);
  return std::nullopt;
}

inline DistortionKind parse_kind(std::string_view s) {
  if (auto k = kind_from_name(s)) return *k;
  throw ParseError("unknown distortion kind '" + std::string(s) + "'");
}

inline Category parse_category(std::string_view s) {
  if (auto c = category_from_name(s)) return *c;
  throw ParseError("unknown distortion category '" + std::string(s) + "'");
}

inline std::vector<DistortionKind> all_kinds() {
  std::vector<DistortionKind> v;
  for (std::size_t i = 0; i < kNumKinds; ++i) v.push_back(static_cast<DistortionKind>(i));
  return v;
}

inline std::vector<Category> all_categories() {
  std::vector<Category> v;
  for (std::size_t i = 0; i < kNumCategories; ++i) v.push_back(static_cast<Category>(i));
  return v;
}

/// Subset of the 14 categories; the set view and the multi-hot view share one bitset.
class LabelSet {
 public:
  LabelSet() = default;
  LabelSet(std::initializer_list<Category> cats) {
    for (Category c : cats) insert(c);
  }

  static LabelSet from_multi_hot(const std::vector<double>& y, double threshold = 0.5) {
    detail::require(y.size() == kNumCategories, "multi-hot vector must have 14 entries");
    LabelSet s;
    for (std::size_t i = 0; i < kNumCategories; ++i)
      if (y[i] > threshold) s.bits_.set(i);
    return s;
  }

  static LabelSet from_bits(unsigned long bits) {
    detail::require(bits >> kNumCategories == 0, "label bits out of range");
    LabelSet s;
    s.bits_ = std::bitset<kNumCategories>(bits);
    return s;
  }

  static LabelSet all() {
    LabelSet s;
    s.bits_.set();
    return s;
  }

  void insert(Category c) noexcept { bits_.set(static_cast<std::size_t>(c)); }
  void erase(Category c) noexcept { bits_.reset(static_cast<std::size_t>(c)); }
  bool contains(Category c) const noexcept { return bits_.test(static_cast<std::size_t>(c)); }
  std::size_t size() const noexcept { return bits_.count(); }
  bool empty() const noexcept { return bits_.none(); }

  LabelSet operator&(const LabelSet& o) const noexcept { return LabelSet(bits_ & o.bits_); }
  LabelSet operator|(const LabelSet& o) const noexcept { return LabelSet(bits_ | o.bits_); }
  /// Set difference.
  LabelSet operator-(const LabelSet& o) const noexcept { return LabelSet(bits_ & ~o.bits_); }
  LabelSet complement() const noexcept { return LabelSet(~bits_); }
  bool subset_of(const LabelSet& o) const noexcept { return (bits_ & ~o.bits_).none(); }
  bool disjoint(const LabelSet& o) const noexcept { return (bits_ & o.bits_).none(); }
  bool operator==(const LabelSet& o) const noexcept = default;
  bool operator<(const LabelSet& o) const noexcept { return bits_.to_ulong() < o.bits_.to_ulong(); }

  std::vector<Category> members() const {
    std::vector<Category> v;
    for (std::size_t i = 0; i < kNumCategories; ++i)
      if (bits_.test(i)) v.push_back(static_cast<Category>(i));
    return v;
  }

  std::vector<double> multi_hot() const {
    std::vector<double> y(kNumCategories, 0.0);
    for (std::size_t i = 0; i < kNumCategories; ++i) y[i] = bits_.test(i) ? 1.0 : 0.0;
    return y;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> v;
    for (Category c : members()) v.emplace_back(name(c));
    return v;
  }

  std::string to_string() const {
    std::string s = "{";
    for (const auto& n : names()) s += (s.size() > 1 ? "," : "") + n;
    return s + "}";
  }

  unsigned long bits() const noexcept { return bits_.to_ulong(); }

 private:
  explicit LabelSet(std::bitset<kNumCategories> b) : bits_(b) {}
  std::bitset<kNumCategories> bits_;
};

/// Kind -> category mapping; the default is kDefaultGrouping but callers may supply another.
class Grouping {
 public:
  Grouping() : map_(kDefaultGrouping) {}
  explicit Grouping(const std::array<Category, kNumKinds>& map) : map_(map) {}

  Category category(DistortionKind k) const noexcept { return map_[static_cast<std::size_t>(k)]; }

  std::vector<DistortionKind> kinds_of(Category c) const {
    std::vector<DistortionKind> v;
    for (std::size_t i = 0; i < kNumKinds; ++i)
      if (map_[i] == c) v.push_back(static_cast<DistortionKind>(i));
    return v;
  }

  bool surjective() const {
    LabelSet s;
    for (Category c : map_) s.insert(c);
    return s.size() == kNumCategories;
  }

 private:
  std::array<Category, kNumKinds> map_;
};

inline LabelSet kinds_to_labels(const std::vector<DistortionKind>& kinds, const Grouping& g = {}) {
  LabelSet s;
  for (DistortionKind k : kinds) s.insert(g.category(k));
  return s;
}

inline LabelSet labels_from_names(const std::vector<std::string>& names) {
  LabelSet s;
  for (const auto& n : names) s.insert(parse_category(n));
  return s;
}

}  // namespace prism

#endif
