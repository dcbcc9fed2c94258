#ifndef PRISM_EMBEDDING_GRADCHECK_HPP
#define PRISM_EMBEDDING_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/rng.hpp"
#include "prism/embedding/layers.hpp"

namespace prism {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Central differences of `loss` at `params` against `analytic` on up to
/// `samples` coordinates drawn without replacement.
inline GradCheckResult finite_diff_check(const std::function<double(std::span<const double>)>& loss, Vec params,
                                         std::span<const double> analytic, double epsilon = 1e-5,
                                         std::size_t samples = 200, std::uint64_t seed = 42) {
  if (!(epsilon > 0.0)) throw InvalidArgument("finite_diff_check: epsilon must be positive");
  detail::require(analytic.size() == params.size(), "finite_diff_check: gradient size mismatch");
  std::vector<std::size_t> idx(params.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SeededRng rng(seed);
  rng.shuffle(idx);
  idx.resize(std::min(samples, idx.size()));

  GradCheckResult r;
  for (std::size_t i : idx) {
    const double keep = params[i];
    params[i] = keep + epsilon;
    const double up = loss(params);
    params[i] = keep - epsilon;
    const double down = loss(params);
    params[i] = keep;
    if (!std::isfinite(up) || !std::isfinite(down)) throw NumericError("finite_diff_check: non-finite loss");
    const double e = relative_error(analytic[i], (up - down) / (2.0 * epsilon));
    if (r.checked == 0 || e > r.max_rel_error) {
      r.max_rel_error = e;
      r.worst_index = i;
    }
    ++r.checked;
  }
  return r;
}

/// Concatenation of a model's trainable parameters in for_each_param order.
template <class M>
Vec flatten_params(M& model) {
  Vec out;
  model.for_each_param("", [&](const std::string&, Vec& v, const Shape&) { out.insert(out.end(), v.begin(), v.end()); });
  return out;
}

template <class M>
void unflatten_params(M& model, std::span<const double> flat) {
  std::size_t at = 0;
  model.for_each_param("", [&](const std::string&, Vec& v, const Shape&) {
    detail::require(at + v.size() <= flat.size(), "unflatten_params: vector too short");
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(at), flat.begin() + static_cast<std::ptrdiff_t>(at + v.size()),
              v.begin());
    at += v.size();
  });
  detail::require(at == flat.size(), "unflatten_params: vector too long");
}

}  // namespace prism

#endif
