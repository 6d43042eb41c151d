#ifndef TBC_ANALYTIC_HPP
#define TBC_ANALYTIC_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "tbc/functionals.hpp"
#include "tbc/geometry.hpp"
#include "tbc/params.hpp"
#include "tbc/rng.hpp"
#include "tbc/sampling.hpp"

namespace tbc {

/// kappa_n = pi^{n/2} / Gamma(n/2 + 1).
inline double unit_ball_volume(int n) {
  require(n >= 1, "unit_ball_volume: n must be >= 1");
  return std::pow(std::numbers::pi, 0.5 * n) / boost::math::tgamma(0.5 * n + 1.0);
}

/// d-volume of the cap of height w cut from a d-ball of radius z.
inline double spherical_cap_volume(int d, double z, double w) {
  require(d >= 1, "spherical_cap_volume: d must be >= 1");
  require(z >= 0.0 && w >= 0.0 && w <= 2.0 * z * (1.0 + 1e-15), "spherical_cap_volume: need 0 <= w <= 2z");
  if (z == 0.0 || w == 0.0) return 0.0;
  w = std::min(w, 2.0 * z);
  const double ball = unit_ball_volume(d) * std::pow(z, d);
  auto small_cap = [&](double height) {
    const double x = std::clamp(height * (2.0 * z - height) / (z * z), 0.0, 1.0);
    return 0.5 * ball * boost::math::ibeta(0.5 * (d + 1), 0.5, x);
  };
  if (w <= z) return small_cap(w);
  return ball - small_cap(2.0 * z - w);
}

/// P(x in Z) = 1 - exp(-gamma r^d kappa_d), the same for every x.
inline double point_hit_probability(const ModelParams& p) {
  return -std::expm1(-p.gamma * std::pow(p.r, p.d) * unit_ball_volume(p.d));
}

/// E[lambda_{d+1}(Z cap W_s)]; unchanged by stacking.
inline double expected_covered_volume(const ModelParams& p) { return point_hit_probability(p) * p.window_volume(); }

inline std::pair<double, double> cylinder_hit_probability_bounds(const ModelParams& p) {
  const double kd = unit_ball_volume(p.d);
  const double lower = -std::expm1(-p.gamma * std::pow(2.0 * p.r, p.d) * kd);
  const double upper =
      -std::expm1(-p.gamma * (p.max_scope() + p.r) * std::pow(2.0, p.d + 1) * std::pow(p.r, p.d) * kd);
  return {lower, upper};
}

/// Bounds on E[number of isolated cylinders with basepoint in A].
inline std::pair<double, double> isolated_intensity_bounds(const ModelParams& p, double a_volume) {
  const double kd = unit_ball_volume(p.d);
  const double base = p.gamma * a_volume;
  const double lower =
      base * std::exp(-p.gamma * (p.max_scope() + p.r) * std::pow(2.0, p.d + 1) * std::pow(p.r, p.d) * kd);
  const double upper = base * std::exp(-p.gamma * std::pow(2.0 * p.r, p.d) * kd);
  return {lower, upper};
}

namespace detail {

/// lambda_d of the union of two r-balls whose centres are delta apart.
inline double two_ball_union_volume(int d, double r, double delta) {
  const double ball = unit_ball_volume(d) * std::pow(r, d);
  if (delta >= 2.0 * r) return 2.0 * ball;
  return 2.0 * ball - 2.0 * spherical_cap_volume(d, r, r - 0.5 * delta);
}

/// Monte Carlo lambda_d of a union of r-balls.
inline std::pair<double, double> ball_union_volume_mc(const std::vector<Vec>& centres, double r, std::size_t n,
                                                      Engine& rng) {
  const int d = centres.front().size();
  Box box{centres.front(), centres.front()};
  for (const Vec& c : centres)
    for (int i = 0; i < d; ++i) {
      box.lo[i] = std::min(box.lo[i], c[i] - r);
      box.hi[i] = std::max(box.hi[i], c[i] + r);
    }
  double vol = 1.0;
  for (int i = 0; i < d; ++i) vol *= box.hi[i] - box.lo[i];
  std::size_t hits = 0;
  Vec x(d);
  for (std::size_t k = 0; k < n; ++k) {
    for (int i = 0; i < d; ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * uniform01(rng);
    for (const Vec& c : centres)
      if (dist2(x, c) <= r * r) {
        ++hits;
        break;
      }
  }
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  return {vol * p, vol * std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

}  // namespace detail

struct CapacityResult {
  double value = 0.0;
  /// Standard error of the Monte Carlo parts (0 when everything is exact).
  double tolerance = 0.0;
};

struct CapacityOptions {
  std::size_t direction_samples = 20000;
  std::size_t union_points = 20000;
  std::uint64_t seed = 0;
};

/// P(Z cap C != empty) for a finite set C of points of R^d x [0, T].
inline CapacityResult capacity_functional_pointset(const ModelParams& p, const std::vector<Vec>& points,
                                                   const CapacityOptions& opt = {}) {
  require(!points.empty(), "capacity_functional_pointset: empty point set");
  Engine rng = make_stream(opt.seed, 0, Stream::Constants);
  std::vector<Vec> distinct;
  for (const Vec& x : points) {
    require(x.size() == p.d + 1, "capacity_functional_pointset: point has wrong dimension");
    if (std::find(distinct.begin(), distinct.end(), x) == distinct.end()) distinct.push_back(x);
  }
  const double kd = unit_ball_volume(p.d);

  // lambda_d of the dilated shadow for one direction; second value is its SE.
  auto shadow_volume = [&](const Direction& v, std::size_t budget) -> std::pair<double, double> {
    std::vector<Vec> sh;
    for (const Vec& x : distinct) sh.push_back(v_shadow(x, v));
    if (sh.size() == 1) return {kd * std::pow(p.r, p.d), 0.0};
    if (sh.size() == 2) return {detail::two_ball_union_volume(p.d, p.r, dist(sh[0], sh[1])), 0.0};
    return detail::ball_union_volume_mc(sh, p.r, budget, rng);
  };

  double mean = 0.0, var = 0.0;
  if (const auto* dl = std::get_if<DiscreteLaw>(&p.law)) {
    for (std::size_t i = 0; i < dl->directions.size(); ++i) {
      const auto [m, se] = shadow_volume(Direction(dl->directions[i], p.h), opt.union_points);
      mean += dl->weights[i] * m;
      var += dl->weights[i] * dl->weights[i] * se * se;
    }
  } else if (const auto* g = std::get_if<DegenerateLaw>(&p.law)) {
    const auto [m, se] = shadow_volume(Direction(g->direction, p.h), opt.union_points);
    mean = m;
    var = se * se;
  } else if (distinct.size() == 1) {
    mean = kd * std::pow(p.r, p.d);
  } else {
    // Average over the cap; each direction gets a small union budget.
    const std::size_t n = std::max<std::size_t>(opt.direction_samples, 2);
    const std::size_t budget = std::max<std::size_t>(opt.union_points / 100, 64);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double m = shadow_volume(detail::sample_uniform_cap(p.d, p.h, rng), budget).first;
      sum += m;
      sum2 += m * m;
    }
    mean = sum / n;
    var = std::max(0.0, sum2 / n - mean * mean) / n;
  }
  const double value = -std::expm1(-p.gamma * mean);
  // Delta method: d/dm (1 - e^{-gamma m}) = gamma e^{-gamma m}.
  return {value, p.gamma * std::exp(-p.gamma * mean) * std::sqrt(var)};
}

/// Closed-form bound constants for one functional.
struct BoundReport {
  FunctionalKind kind = FunctionalKind::Volume;
  double kappa_d = 0.0;
  double kappa_d1 = 0.0;
  double R_h = 0.0;
  double R = 0.0;
  double hit_prob_point = 0.0;
  double expected_volume = 0.0;
  double cyl_hit_lower = 0.0;
  double cyl_hit_upper = 0.0;
  double iso_intensity_lower = 0.0;
  double iso_intensity_upper = 0.0;
  double tau = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c_dRT = 0.0;
  double wasserstein_c = 0.0;
  double variance_upper = 0.0;
  /// Isolated / Euler only: Monte Carlo parts of c1.
  bool c1_estimated = false;
  double p_intersect = 0.0;
  double p_intersect_se = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  bool stacked = false;
};

struct ConstantOptions {
  /// Basepoint pairs used to estimate the pair-intersection probability.
  std::size_t intersect_pairs = 1000000;
  std::uint64_t seed = 0;
};

/// 2^{2d-1} (R^d + 2^{-d}) / T.
inline double c_dRT(int d, double R, double T) {
  return std::pow(2.0, 2 * d - 1) * (std::pow(R, d) + std::pow(2.0, -d)) / T;
}

/// c = gamma sqrt(c_dRT) / c1^{3/2} (8 sqrt(gamma c1 c2) kappa_d R^d + (1 + c2) sqrt(c_dRT)).
inline double wasserstein_constant(const ModelParams& p, double c1, double c2) {
  const double R = p.interaction_radius();
  const double cd = c_dRT(p.d, R, p.T);
  const double ball_R = unit_ball_volume(p.d) * std::pow(R, p.d);
  return p.gamma * std::sqrt(cd) / std::pow(c1, 1.5) *
         (8.0 * std::sqrt(p.gamma * c1 * c2) * ball_R + (1.0 + c2) * std::sqrt(cd));
}

namespace detail {

inline BoundReport common_report(const ModelParams& p, FunctionalKind kind) {
  BoundReport b;
  b.kind = kind;
  b.stacked = p.stacked();
  b.kappa_d = unit_ball_volume(p.d);
  b.kappa_d1 = unit_ball_volume(p.d + 1);
  b.R_h = p.max_scope();
  b.R = p.interaction_radius();
  b.hit_prob_point = point_hit_probability(p);
  b.expected_volume = expected_covered_volume(p);
  std::tie(b.cyl_hit_lower, b.cyl_hit_upper) = cylinder_hit_probability_bounds(p);
  std::tie(b.iso_intensity_lower, b.iso_intensity_upper) = isolated_intensity_bounds(p, p.window_spatial_volume());
  const double ball = b.kappa_d * std::pow(p.r, p.d);
  b.tau = std::exp(-2.0 * p.gamma * ball + 2.0 * p.gamma * spherical_cap_volume(p.d, p.r, 0.5 * p.r)) -
          std::exp(-2.0 * p.gamma * ball);
  b.c_dRT = c_dRT(p.d, b.R, p.T);
  return b;
}

inline void finish_report(const ModelParams& p, BoundReport& b) {
  b.wasserstein_c = wasserstein_constant(p, b.c1, b.c2);
  b.variance_upper = (1.0 + b.c2) * p.window_volume();
}

inline void require_window_hypothesis(const ModelParams& p) {
  const double need = 6.0 * (p.max_scope() + p.r);
  if (p.s < need)
    throw HypothesisViolation("window hypothesis s >= 6(R_h + r) = " + std::to_string(need) +
                              " violated by s = " + std::to_string(p.s));
}

/// P(two independent cylinders with uniform basepoints in a box of side
/// 2(R_h + r) intersect), with its standard error.
inline std::pair<double, double> pair_intersection_probability(const ModelParams& p, const ConstantOptions& opt) {
  Engine rng = make_stream(opt.seed, 0, Stream::Constants);
  const double half = p.max_scope() + p.r;
  std::uniform_real_distribution<double> ux(-half, half);
  const std::size_t n = std::max<std::size_t>(opt.intersect_pairs, 1);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n; ++k) {
    Vec a(p.d), b(p.d);
    for (int i = 0; i < p.d; ++i) a[i] = ux(rng);
    for (int i = 0; i < p.d; ++i) b[i] = ux(rng);
    const Body x = make_body(p, a, rng);
    const Body y = make_body(p, b, rng);
    if (closest_approach_tracks(pieces_of(x), pieces_of(y)).distance <= 2.0 * p.r) ++hits;
  }
  const double q = static_cast<double>(hits) / static_cast<double>(n);
  return {q, std::sqrt(q * (1.0 - q) / static_cast<double>(n))};
}

/// c1 for the counting functionals from the box construction; `factor` is 4
/// for the isolated count and 5 for the Euler characteristic.
inline void counting_c1(const ModelParams& p, double factor, const ConstantOptions& opt, BoundReport& b) {
  const double half = p.max_scope() + p.r;
  const auto [q, se] = pair_intersection_probability(p, opt);
  b.p_intersect = q;
  b.p_intersect_se = se;
  b.c4 = factor * (1.0 - q) * q;
  const double inner_mean = p.gamma * std::pow(2.0 * half, p.d);
  const double two_points = std::exp(-inner_mean) * inner_mean * inner_mean / 2.0;
  const double ring_empty = std::exp(-p.gamma * (std::pow(6.0, p.d) - std::pow(2.0, p.d)) * std::pow(half, p.d));
  b.c5 = two_points * ring_empty;
  b.c1 = b.c4 * b.c5 / (std::pow(6.0, p.d) * p.T * std::pow(half, p.d));
  b.c1_estimated = true;
}

/// Smallest segment length of the stacking grid.
inline double smallest_gap(const ModelParams& p) {
  const std::vector<double> grid = p.stacking->breakpoints(p.T);
  double gap = p.T;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) gap = std::min(gap, grid[k + 1] - grid[k]);
  return gap;
}

}  // namespace detail

inline BoundReport volume_clt_constants(const ModelParams& p) {
  p.validate();
  BoundReport b = detail::common_report(p, FunctionalKind::Volume);
  const double reach = p.stacked() ? std::min(p.r, detail::smallest_gap(p)) : std::min(p.r, p.T);
  b.c1 = b.tau * b.kappa_d1 * std::pow(reach, p.d + 1) / std::pow(2.0, p.d + 1);
  b.c2 = std::pow(p.T * std::pow(p.r, p.d) * b.kappa_d / p.h, 4);
  detail::finish_report(p, b);
  return b;
}

/// 4th raw moment pieces of Poisson(a): E[N^k] for k = 1..4.
inline std::array<double, 4> poisson_raw_moments(double a) {
  return {a, a * a + a, a * a * a + 3.0 * a * a + a, a * a * a * a + 6.0 * a * a * a + 7.0 * a * a + a};
}

inline BoundReport isolated_clt_constants(const ModelParams& p, const ConstantOptions& opt = {}) {
  p.validate();
  detail::require_window_hypothesis(p);
  BoundReport b = detail::common_report(p, FunctionalKind::IsolatedCount);
  const double a = p.gamma * b.kappa_d * std::pow(b.R, p.d);
  b.c2 = poisson_raw_moments(a)[3] + 1.0;
  detail::counting_c1(p, 4.0, opt, b);
  detail::finish_report(p, b);
  return b;
}

inline BoundReport euler_clt_constants(const ModelParams& p, const ConstantOptions& opt = {}) {
  p.validate();
  detail::require_window_hypothesis(p);
  BoundReport b = detail::common_report(p, FunctionalKind::EulerCharacteristic);
  const double a = p.gamma * b.kappa_d * std::pow(b.R, p.d);
  const auto m = poisson_raw_moments(a);
  // E[(2 + N)^4] = 16 + 32 m1 + 24 m2 + 8 m3 + m4.
  b.c2 = 16.0 + 32.0 * m[0] + 24.0 * m[1] + 8.0 * m[2] + m[3];
  detail::counting_c1(p, 5.0, opt, b);
  detail::finish_report(p, b);
  return b;
}

inline BoundReport clt_constants(FunctionalKind kind, const ModelParams& p, const ConstantOptions& opt = {}) {
  switch (kind) {
    case FunctionalKind::Volume: return volume_clt_constants(p);
    case FunctionalKind::IsolatedCount: return isolated_clt_constants(p, opt);
    default: return euler_clt_constants(p, opt);
  }
}

}  // namespace tbc

#endif  // TBC_ANALYTIC_HPP
