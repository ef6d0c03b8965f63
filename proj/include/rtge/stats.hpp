#pragma once

// Kolmogorov-Smirnov tests with the asymptotic Kolmogorov distribution
// (Stephens' small-sample correction of the statistic).

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "rtge/errors.hpp"

namespace rtge::stats {

/// P(K > lambda) for the Kolmogorov distribution.
inline double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic;
  double p_value;
};

inline double ks_p_value(double d, double effective_n) {
  const double s = std::sqrt(effective_n);
  return kolmogorov_survival((s + 0.12 + 0.11 / s) * d);
}

/// One-sample test of `x` against a continuous CDF.
inline KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw InvalidArgument("ks_one_sample: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return {d, ks_p_value(d, n)};
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidArgument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

}  // namespace rtge::stats
