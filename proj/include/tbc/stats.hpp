#ifndef TBC_STATS_HPP
#define TBC_STATS_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "tbc/errors.hpp"

namespace tbc {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double mean_of(const std::vector<double>& x) {
  require(!x.empty(), "mean_of: empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased sample variance (n - 1 denominator).
inline double variance_of(const std::vector<double>& x) {
  require(x.size() >= 2, "variance_of: need at least two values");
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// (x - mean) / sd with the empirical moments.
inline std::vector<double> standardize(const std::vector<double>& x) {
  const double m = mean_of(x);
  const double sd = std::sqrt(variance_of(x));
  require(sd > 0.0, "standardize: zero variance");
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - m) / sd;
  return z;
}

/// sup_x |F_n(x) - Phi(x)| of the values as given (not re-standardized).
inline double ks_distance_to_normal(std::vector<double> values) {
  require(values.size() >= 2, "ks_distance_to_normal: need at least two values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    const double f = normal_cdf(values[i]);
    d = std::max({d, static_cast<double>(j) / n - f, f - static_cast<double>(i) / n});
    i = j;
  }
  return d;
}

/// (1/n) sum |x_(i) - Phi^{-1}((i - 1/2) / n)|.
inline double empirical_w1_to_normal(std::vector<double> values) {
  require(values.size() >= 2, "empirical_w1_to_normal: need at least two values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double s = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    s += std::abs(values[i] - normal_quantile((static_cast<double>(i) + 0.5) / n));
  return s / n;
}

/// Chi-square confidence interval for the variance of a normal sample.
inline std::pair<double, double> variance_confidence_interval(const std::vector<double>& x, double level = 0.99) {
  const double n = static_cast<double>(x.size());
  const double s2 = variance_of(x);
  const boost::math::chi_squared_distribution<double> chi(n - 1.0);
  const double alpha = 1.0 - level;
  return {(n - 1.0) * s2 / boost::math::quantile(chi, 1.0 - 0.5 * alpha),
          (n - 1.0) * s2 / boost::math::quantile(chi, 0.5 * alpha)};
}

inline double lag1_autocorrelation(const std::vector<double>& x) {
  if (x.size() < 3) return 0.0;
  const double m = mean_of(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    den += (x[i] - m) * (x[i] - m);
    if (i + 1 < x.size()) num += (x[i] - m) * (x[i + 1] - m);
  }
  return den > 0.0 ? num / den : 0.0;
}

/// Least-squares slope of y against x.
inline double regression_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "regression_slope: need two or more pairs");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  require(sxx > 0.0, "regression_slope: x values are all equal");
  return sxy / sxx;
}

}  // namespace tbc

#endif  // TBC_STATS_HPP
