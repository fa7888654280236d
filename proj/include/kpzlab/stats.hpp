#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "kpzlab/error.hpp"

namespace kpzlab {

struct Interval {
  double lo;
  double hi;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

inline Interval wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054) {
  require(n > 0, "Wilson interval needs n > 0");
  const double nd = static_cast<double>(n), p = static_cast<double>(successes) / nd, z2 = z * z;
  const double denom = 1 + z2 / nd;
  const double centre = (p + z2 / (2 * nd)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / nd + z2 / (4 * nd * nd)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

struct Moments {
  double mean = 0;
  double variance = 0;  // unbiased
  double m4 = 0;        // fourth central moment
  std::size_t n = 0;
  double se_mean() const { return std::sqrt(variance / static_cast<double>(n)); }
  // Large-sample standard error of the sample variance.
  double se_variance() const {
    return std::sqrt(std::max(0.0, m4 - variance * variance) / static_cast<double>(n));
  }
};

inline Moments moments(const std::vector<double>& v) {
  require(v.size() >= 2, "moments need at least two samples");
  Moments m;
  m.n = v.size();
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(m.n);
  double s2 = 0, s4 = 0;
  for (double x : v) {
    double d = (x - m.mean) * (x - m.mean);
    s2 += d;
    s4 += d * d;
  }
  m.variance = s2 / static_cast<double>(m.n - 1);
  m.m4 = s4 / static_cast<double>(m.n);
  return m;
}

// Linear-interpolation quantile of unsorted data.
inline double quantile(std::vector<double> v, double q) {
  require(!v.empty(), "quantile of empty sample");
  std::sort(v.begin(), v.end());
  double h = q * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  require(!a.empty() && !b.empty(), "KS test needs non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

struct LinearFit {
  double slope;
  double intercept;
  double rss;
  std::vector<double> residuals;
};

inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "least squares needs matching samples");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0, "least squares needs spread in the regressor");
  LinearFit f{sxy / sxx, 0, 0, {}};
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    f.residuals.push_back(r);
    f.rss += r * r;
  }
  return f;
}

}  // namespace kpzlab
