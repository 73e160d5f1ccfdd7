#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>

namespace pbp {

inline constexpr double kZ95 = 1.959963984540054;

struct Proportion {
  std::size_t successes = 0;
  std::size_t trials = 0;
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  double half_width() const { return 0.5 * (hi - lo); }
};

/// Wilson score interval for a binomial proportion.
inline Proportion wilson(std::size_t successes, std::size_t trials, double z = kZ95) {
  Proportion r{successes, trials, 0.0, 0.0, 1.0};
  if (trials == 0) return r;
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (phat + z2 / (2.0 * n)) / denom;
  const double spread = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
  r.estimate = phat;
  r.lo = successes == 0 ? 0.0 : std::max(0.0, center - spread);
  r.hi = successes == trials ? 1.0 : std::min(1.0, center + spread);
  return r;
}

/// Least-squares slope of y against x; nullopt with fewer than two distinct x.
inline std::optional<double> ls_slope(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0) return std::nullopt;
  return sxy / sxx;
}

}  // namespace pbp
