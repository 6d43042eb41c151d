#ifndef TBC_SAMPLING_HPP
#define TBC_SAMPLING_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "tbc/geometry.hpp"
#include "tbc/params.hpp"
#include "tbc/rng.hpp"

namespace tbc {

/// One realisation of the marked Poisson process on the dilated window.
struct CylinderSample {
  ModelParams params;
  std::vector<Body> cylinders;
  std::uint64_t seed = 0;
  std::uint64_t replication_index = 0;

  double dilated_halfwidth() const { return params.dilated_halfwidth(); }
  std::size_t size() const { return cylinders.size(); }
};

/// Homogeneous Poisson points of intensity gamma in an axis-aligned box.
inline std::vector<Vec> sample_poisson_basepoints(const ModelParams& params, const Box& region,
                                                  Engine& rng) {
  double vol = 1.0;
  for (int i = 0; i < region.dim(); ++i) {
    require(region.hi[i] > region.lo[i], "sample_poisson_basepoints: degenerate region");
    vol *= region.hi[i] - region.lo[i];
  }
  const double mean = params.gamma * vol;
  std::vector<Vec> pts;
  if (!(mean > 0.0)) return pts;
  const auto n = std::poisson_distribution<long long>(mean)(rng);
  pts.reserve(static_cast<std::size_t>(n));
  for (long long k = 0; k < n; ++k) {
    Vec p(region.dim());
    for (int i = 0; i < region.dim(); ++i)
      p[i] = std::uniform_real_distribution<double>(region.lo[i], region.hi[i])(rng);
    pts.push_back(p);
  }
  return pts;
}

namespace detail {

/// Uniform direction on {v in S^d : v_{d+1} > h}. d = 1 and d = 2 use a direct
/// parameterisation (for d = 2 the height is uniform on (h, 1) by the
/// hat-box theorem); larger d rejects from the uniform sphere.
inline Direction sample_uniform_cap(int d, double h, Engine& rng) {
  while (true) {
    Vec v(d + 1);
    if (d == 1) {
      const double half = std::acos(h);
      const double theta = std::uniform_real_distribution<double>(-half, half)(rng);
      v[0] = std::sin(theta);
      v[1] = std::cos(theta);
    } else if (d == 2) {
      const double z = std::uniform_real_distribution<double>(h, 1.0)(rng);
      const double phi = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      v[0] = rho * std::cos(phi);
      v[1] = rho * std::sin(phi);
      v[2] = z;
    } else {
      std::normal_distribution<double> n01;
      double len2 = 0.0;
      for (int i = 0; i <= d; ++i) {
        v[i] = n01(rng);
        len2 += v[i] * v[i];
      }
      if (len2 == 0.0) continue;
      v *= 1.0 / std::sqrt(len2);
    }
    if (v[d] > h && std::abs(norm(v) - 1.0) <= 1e-12) return Direction(v, h);
  }
}

}  // namespace detail

inline Direction sample_direction(const DirectionLaw& law, int d, double h, Engine& rng) {
  if (const auto* dl = std::get_if<DiscreteLaw>(&law)) {
    std::discrete_distribution<std::size_t> pick(dl->weights.begin(), dl->weights.end());
    return Direction(dl->directions[pick(rng)], h);
  }
  if (const auto* g = std::get_if<DegenerateLaw>(&law)) return Direction(g->direction, h);
  return detail::sample_uniform_cap(d, h, rng);
}

/// V = (v_0..v_K) under Q_K: v_0 ~ Q, then each v_k is redrawn from Q with
/// probability q and otherwise copied from v_{k-1}.
inline std::vector<Direction> sample_stacked_directions(const DirectionLaw& law,
                                                        const StackingSchedule& schedule, int d,
                                                        double h, Engine& rng) {
  std::vector<Direction> dirs;
  dirs.reserve(schedule.segments());
  dirs.push_back(sample_direction(law, d, h, rng));
  std::bernoulli_distribution resample(schedule.q);
  for (std::size_t k = 0; k < schedule.times.size(); ++k) {
    if (resample(rng)) dirs.push_back(sample_direction(law, d, h, rng));
    else dirs.push_back(dirs.back());
  }
  return dirs;
}

/// Builds a body from a basepoint and sampled marks according to params.
inline Body make_body(const ModelParams& params, const Vec& p, Engine& rng) {
  if (params.stacking) {
    return CylinderStack(p, params.stacking->breakpoints(params.T),
                         sample_stacked_directions(params.law, *params.stacking, params.d, params.h, rng),
                         params.r);
  }
  return Cylinder(p, sample_direction(params.law, params.d, params.h, rng), params.r, params.T);
}

/// Samples the TBC (or sTBC) model on [-a, a]^d with a = s/2 + R_h + r, so
/// that every cylinder able to meet the window is present.
inline CylinderSample sample_tbc(const ModelParams& params, std::uint64_t seed,
                                 std::uint64_t replication_index) {
  params.validate();
  Engine rng = make_stream(seed, replication_index, Stream::Sample);
  const Box region = Box::cube(params.d, params.dilated_halfwidth());
  const std::vector<Vec> pts = sample_poisson_basepoints(params, region, rng);
  CylinderSample out{params, {}, seed, replication_index};
  out.cylinders.reserve(pts.size());
  for (const Vec& p : pts) out.cylinders.push_back(make_body(params, p, rng));
  return out;
}

}  // namespace tbc

#endif  // TBC_SAMPLING_HPP
