#ifndef PRISM_DISTORTIONS_SPEC_HPP
#define PRISM_DISTORTIONS_SPEC_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prism/core/error.hpp"
#include "prism/core/rng.hpp"
#include "prism/distortions/labels.hpp"

namespace prism {

enum class ParamType : std::uint8_t { real, integer, odd_integer };

/// Closed sampling interval for one parameter of one kind.
struct ParamRange {
  std::string_view name;
  double lo;
  double hi;
  ParamType type = ParamType::real;
};

// Discrete parameters are stored as integer codes:
//   motion_blur.direction   0 horizontal, 1 vertical, 2 diagonal, 3 anti-diagonal
//   motion_blur.depth_mask  0 none, 1 blur foreground (D < tau), 2 blur background (D >= tau)
//   color_jitter.cast       0 warm, 1 cool, 2 green, 3 magenta, 4 cyan, 5 yellow
//   gaussian_noise.mode     0 additive Gaussian, 1 salt-and-pepper
inline std::span<const ParamRange> param_ranges(DistortionKind kind) {
  using enum ParamType;
  static const std::vector<ParamRange> motion{{"kernel_size", 5, 10, integer},
                                              {"direction", 0, 3, integer},
                                              {"depth_mask", 0, 2, integer},
                                              {"tau_depth", 0.3, 0.7}};
  static const std::vector<ParamRange> elastic{{"sigma", 20, 30}, {"alpha", 10, 20}};
  static const std::vector<ParamRange> refraction{{"strength", 20, 80}, {"sigma", 10, 10}};
  static const std::vector<ParamRange> defocus{{"kernel_size", 3, 19, odd_integer}};
  static const std::vector<ParamRange> low_light{{"factor", 0.4, 0.9}};
  static const std::vector<ParamRange> jitter{{"delta_r", -0.4, 0.4}, {"delta_g", -0.4, 0.4}, {"delta_b", -0.4, 0.4},
                                              {"cast", 0, 5, integer}, {"cast_alpha", 0.1, 0.3}};
  static const std::vector<ParamRange> over{{"factor", 1.0, 1.5}, {"threshold", 0.4, 0.9}};
  static const std::vector<ParamRange> under{{"factor", 0.5, 0.9}, {"threshold", 0.1, 0.3}, {"noise_sigma", 0.02, 0.08}};
  static const std::vector<ParamRange> contrast{{"factor", 0.4, 1.0}};
  static const std::vector<ParamRange> saturation{{"factor", 0.4, 1.0}};
  static const std::vector<ParamRange> haze{{"alpha", 0.65, 0.9}};
  static const std::vector<ParamRange> rain{{"kernel_small", 7, 23, integer}, {"kernel_large", 7, 23, integer},
                                            {"zoom", 1.0, 3.5},           {"visibility", 8000, 15000},
                                            {"opacity", 0.2, 0.4},        {"angle", -0.35, 0.35}};
  static const std::vector<ParamRange> snow{{"visibility", 10000, 20000}, {"angle", -0.35, 0.35}};
  static const std::vector<ParamRange> clouds{{"opacity", 0.7, 1.0}, {"shadow", 0.2, 0.7}, {"blur_scale", 1.0, 3.0}};
  static const std::vector<ParamRange> raindrops{{"count", 20, 60, integer}, {"edge_darken", 0.4, 0.8}};
  static const std::vector<ParamRange> noise{{"mode", 0, 1, integer}, {"sigma", 0.05, 0.1}, {"corruption", 0.02, 0.08}};
  static const std::vector<ParamRange> pixelation{{"factor", 2.0, 4.0}};
  switch (kind) {
    case DistortionKind::motion_blur: return motion;
    case DistortionKind::elastic_warp: return elastic;
    case DistortionKind::refraction: return refraction;
    case DistortionKind::defocus_blur: return defocus;
    case DistortionKind::low_light: return low_light;
    case DistortionKind::color_jitter: return jitter;
    case DistortionKind::overexposure: return over;
    case DistortionKind::underexposure: return under;
    case DistortionKind::contrast: return contrast;
    case DistortionKind::saturation: return saturation;
    case DistortionKind::haze: return haze;
    case DistortionKind::rain: return rain;
    case DistortionKind::snow: return snow;
    case DistortionKind::clouds: return clouds;
    case DistortionKind::raindrops: return raindrops;
    case DistortionKind::gaussian_noise: return noise;
    case DistortionKind::pixelation: return pixelation;
  }
  throw InvalidArgument("unknown distortion kind");
}

/// Raindrop radii are drawn per drop at application time from this interval (pixels).
inline constexpr double kRaindropRadiusMin = 3.0;
inline constexpr double kRaindropRadiusMax = 50.0;

/// A distortion kind with its sampled parameters. `seed` drives every random
/// field the transform draws (noise, particles, warps), so application is a pure
/// function of the spec.
struct DistortionSpec {
  DistortionKind kind{};
  std::map<std::string, double, std::less<>> params;
  std::uint64_t seed = 0;

  double param(std::string_view key) const {
    auto it = params.find(key);
    if (it == params.end())
      throw InvalidArgument("distortion " + std::string(name(kind)) + " has no parameter '" + std::string(key) + "'");
    return it->second;
  }
  int int_param(std::string_view key) const { return static_cast<int>(std::lround(param(key))); }

  bool operator==(const DistortionSpec&) const = default;
};

inline bool uses_depth(const DistortionSpec& s) {
  switch (s.kind) {
    case DistortionKind::haze:
    case DistortionKind::rain:
    case DistortionKind::snow: return true;
    case DistortionKind::motion_blur: return s.int_param("depth_mask") != 0;
    default: return false;
  }
}

/// Throws ParseError if a parameter is missing, unknown, or outside its range.
inline void validate(const DistortionSpec& s) {
  const auto ranges = param_ranges(s.kind);
  if (s.params.size() != ranges.size())
    throw ParseError("distortion " + std::string(name(s.kind)) + " expects " + std::to_string(ranges.size()) +
                     " parameters, got " + std::to_string(s.params.size()));
  for (const auto& r : ranges) {
    auto it = s.params.find(r.name);
    if (it == s.params.end())
      throw ParseError("distortion " + std::string(name(s.kind)) + " missing parameter '" + std::string(r.name) + "'");
    const double v = it->second;
    if (!std::isfinite(v) || v < r.lo - 1e-12 || v > r.hi + 1e-12)
      throw ParseError("parameter " + std::string(name(s.kind)) + "." + std::string(r.name) + " = " +
                       std::to_string(v) + " outside [" + std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
    if (r.type != ParamType::real && std::abs(v - std::round(v)) > 1e-9)
      throw ParseError("parameter " + std::string(name(s.kind)) + "." + std::string(r.name) + " must be an integer");
    if (r.type == ParamType::odd_integer && static_cast<long>(std::lround(v)) % 2 == 0)
      throw ParseError("parameter " + std::string(name(s.kind)) + "." + std::string(r.name) + " must be odd");
  }
}

/// Draws every parameter uniformly from its range. Motion-blur depth masking is
/// enabled with probability 0.5 when a depth map will be available.
inline DistortionSpec sample_spec(DistortionKind kind, SeededRng& rng, bool depth_available = true) {
  DistortionSpec s;
  s.kind = kind;
  for (const auto& r : param_ranges(kind)) {
    double v = 0.0;
    switch (r.type) {
      case ParamType::real: v = rng.uniform(r.lo, r.hi); break;
      case ParamType::integer:
        v = static_cast<double>(rng.uniform_int(static_cast<std::int64_t>(r.lo), static_cast<std::int64_t>(r.hi)));
        break;
      case ParamType::odd_integer: {
        const auto lo = static_cast<std::int64_t>(r.lo) / 2, hi = static_cast<std::int64_t>(r.hi) / 2;
        v = static_cast<double>(2 * rng.uniform_int(lo, hi) + 1);
        break;
      }
    }
    s.params.emplace(std::string(r.name), v);
  }
  if (kind == DistortionKind::motion_blur) {
    s.params["depth_mask"] = (depth_available && rng.coin(0.5)) ? (rng.coin(0.5) ? 1.0 : 2.0) : 0.0;
  }
  s.seed = rng.next_u64();
  return s;
}

/// Parameters at the midpoint of every range ("median intensity"); integer
/// parameters round to the nearest admissible value.
inline DistortionSpec median_spec(DistortionKind kind, std::uint64_t seed = 42) {
  DistortionSpec s;
  s.kind = kind;
  for (const auto& r : param_ranges(kind)) {
    double v = 0.5 * (r.lo + r.hi);
    if (r.type == ParamType::integer) v = std::floor(v);
    if (r.type == ParamType::odd_integer) {
      v = std::round(v);
      if (static_cast<long>(v) % 2 == 0) v += 1.0;
    }
    s.params.emplace(std::string(r.name), v);
  }
  if (kind == DistortionKind::motion_blur) s.params["depth_mask"] = 0.0;
  if (kind == DistortionKind::gaussian_noise) s.params["mode"] = 0.0;
  s.seed = seed;
  return s;
}

inline nlohmann::json to_json(const DistortionSpec& s) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : s.params) params[k] = v;
  return {{"kind", std::string(name(s.kind))}, {"params", params}, {"seed", s.seed}};
}

inline DistortionSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ParseError("distortion spec must be an object with a string 'kind'");
  DistortionSpec s;
  s.kind = parse_kind(j["kind"].get<std::string>());
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ParseError("distortion 'params' must be an object");
    for (const auto& [k, v] : j["params"].items()) {
      if (!v.is_number()) throw ParseError("parameter '" + k + "' must be numeric");
      s.params.emplace(k, v.get<double>());
    }
  }
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  validate(s);
  return s;
}

inline std::vector<DistortionKind> kinds_of(const std::vector<DistortionSpec>& specs) {
  std::vector<DistortionKind> v;
  for (const auto& s : specs) v.push_back(s.kind);
  return v;
}

}  // namespace prism

#endif
