#ifndef PRISM_EVAL_STATS_HPP
#define PRISM_EVAL_STATS_HPP

#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "prism/core/error.hpp"

namespace prism {

namespace detail {
/// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_cf(double a, double b, double x) {
  constexpr double tiny = 1e-300, eps = 1e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete beta: continued fraction did not converge");
}
}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  detail::require(a > 0.0 && b > 0.0, "incomplete_beta: a and b must be positive");
  detail::require(x >= 0.0 && x <= 1.0, "incomplete_beta: x must lie in [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  const double lbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(lbt);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_cf(a, b, x) / a;
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// Student-t CDF with `dof` degrees of freedom.
inline double student_t_cdf(double t, double dof) {
  detail::require(dof > 0.0, "student_t_cdf: dof must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
  return t >= 0.0 ? 1.0 - tail : tail;
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t dof = 0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;

  nlohmann::json to_json() const {
    return {{"t", t}, {"p", p}, {"dof", dof}, {"mean_diff", mean_diff}, {"sd_diff", sd_diff}};
  }
};

/// Two-tailed one-sample t-test on paired differences d_i.
inline TTestResult t_test_differences(const std::vector<double>& d) {
  detail::require(d.size() >= 2, "paired_t_test: need at least 2 pairs");
  const double n = static_cast<double>(d.size());
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 1e-15 * std::max(1.0, std::abs(mean))))
    throw NumericError("paired_t_test: zero variance in the differences");
  TTestResult r;
  r.mean_diff = mean;
  r.sd_diff = sd;
  r.dof = d.size() - 1;
  r.t = mean / (sd / std::sqrt(n));
  const double df = static_cast<double>(r.dof);
  r.p = std::min(1.0, incomplete_beta(0.5 * df, 0.5, df / (df + r.t * r.t)));
  return r;
}

/// Paired samples: d_i = b_i - a_i.
inline TTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  detail::require(a.size() == b.size(), "paired_t_test: sample lengths differ");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = b[i] - a[i];
  return t_test_differences(d);
}

}  // namespace prism

#endif
