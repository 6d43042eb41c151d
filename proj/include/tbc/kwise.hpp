#ifndef TBC_KWISE_HPP
#define TBC_KWISE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "tbc/geometry.hpp"

namespace tbc {

enum class Certainty { Empty, Nonempty, Indeterminate };

struct KwiseOptions {
  /// Feasibility slack on the common-intersection radius.
  double eps_feas = 1e-9;
  /// Report Indeterminate instead of deciding when the optimum is within
  /// eps_feas of r.
  bool strict = false;
  /// Time search stops at width rel_time_tol * time_scale.
  double time_scale = 1.0;
  double rel_time_tol = 1e-10;
};

struct KwiseResult {
  Certainty status = Certainty::Empty;
  /// Smallest common-ball radius seen by the search. It is exact only when
  /// the result is Empty after a full search; the search stops early once a
  /// point within r - eps_feas is found, and prefilter rejections leave it
  /// infinite.
  double min_radius = std::numeric_limits<double>::infinity();
  /// Time at which min_radius was seen.
  double u = 0.0;

  bool nonempty() const { return status == Certainty::Nonempty; }
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct CenterSolution {
  double value2 = kInf;  // max_i |y - c_i|^2 + w_i at y
  Vec y;
};

/// Gaussian elimination with partial pivoting on an n x n system (n <= 4).
inline bool solve_small(std::array<std::array<double, Vec::kCapacity>, Vec::kCapacity>& a,
                        std::array<double, Vec::kCapacity>& b, int n) {
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a[i][j]));
  if (scale == 0.0) return n == 0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i)
      if (std::abs(a[i][col]) > std::abs(a[piv][col])) piv = i;
    if (std::abs(a[piv][col]) <= 1e-13 * scale) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int i = col + 1; i < n; ++i) {
      const double f = a[i][col] / a[col][col];
      for (int j = col; j < n; ++j) a[i][j] -= f * a[col][j];
      b[i] -= f * b[col];
    }
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[i][j] * b[j];
    b[i] = s / a[i][i];
  }
  return true;
}

inline double weighted_value(const std::vector<Vec>& c, const std::vector<double>& w, const Vec& y) {
  double v = -kInf;
  for (std::size_t i = 0; i < c.size(); ++i) v = std::max(v, dist2(y, c[i]) + w[i]);
  return v;
}

/// Minimises max_i |y - c_i|^2 + w_i over y in R^m. The optimum lies in the
/// convex hull of an affinely independent support set of at most m + 1
/// centres with equal values; supports are enumerated by increasing size and
/// the first one satisfying the optimality conditions is returned.
inline CenterSolution weighted_one_center(const std::vector<Vec>& c, const std::vector<double>& w) {
  const int n = static_cast<int>(c.size());
  const int m = c.front().size();
  CenterSolution best;
  if (m == 0) {
    best.y = Vec(0);
    best.value2 = *std::max_element(w.begin(), w.end());
    return best;
  }
  std::array<int, Vec::kCapacity + 1> idx{};
  const int kmax = std::min(n, m + 1);
  for (int k = 1; k <= kmax; ++k) {
    for (int i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      // Equal-value point in the affine hull of the chosen centres.
      const Vec& a0 = c[idx[0]];
      std::array<Vec, Vec::kCapacity> e;
      std::array<std::array<double, Vec::kCapacity>, Vec::kCapacity> g{};
      std::array<double, Vec::kCapacity> rhs{};
      for (int j = 1; j < k; ++j) e[j - 1] = c[idx[j]] - a0;
      for (int j = 0; j < k - 1; ++j) {
        for (int l = 0; l < k - 1; ++l) g[j][l] = dot(e[j], e[l]);
        rhs[j] = 0.5 * (norm2(e[j]) + w[idx[j + 1]] - w[idx[0]]);
      }
      if (solve_small(g, rhs, k - 1)) {
        Vec y = a0;
        double lambda0 = 1.0;
        bool hull = true;
        for (int j = 0; j < k - 1; ++j) {
          y += rhs[j] * e[j];
          lambda0 -= rhs[j];
          if (rhs[j] < -1e-12) hull = false;
        }
        if (lambda0 < -1e-12) hull = false;
        const double val = dist2(y, a0) + w[idx[0]];
        const double full = weighted_value(c, w, y);
        if (full < best.value2) best = {full, y};
        if (hull && full <= val + 1e-12 * (1.0 + std::abs(val))) return {full, y};
      }
      // Next combination.
      int pos = k - 1;
      while (pos >= 0 && idx[pos] == n - k + pos) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int j = pos + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return best;
}

/// min over x in box of max_i |x - c_i|, returned squared. An optimiser with
/// coordinates S on the boundary minimises the objective over the face's
/// affine span, so the answer is the best feasible face-restricted optimum.
inline double box_one_center2(const std::vector<Vec>& centers, const Box& box) {
  const int d = centers.front().size();
  const std::vector<double> zeros(centers.size(), 0.0);
  const CenterSolution free_sol = weighted_one_center(centers, zeros);
  if (box.contains(free_sol.y)) return free_sol.value2;

  double best = kInf;
  int patterns = 1;
  for (int j = 0; j < d; ++j) patterns *= 3;
  std::vector<Vec> reduced(centers.size());
  std::vector<double> weights(centers.size());
  std::array<int, Vec::kCapacity> state{};
  for (int code = 1; code < patterns; ++code) {
    int rest = code;
    int free_dims = 0;
    bool usable = true;
    for (int j = 0; j < d; ++j) {
      state[j] = rest % 3;
      rest /= 3;
      if (state[j] == 0) ++free_dims;
      else if (!std::isfinite(state[j] == 1 ? box.lo[j] : box.hi[j])) usable = false;
    }
    if (!usable) continue;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      reduced[i] = Vec(free_dims);
      weights[i] = 0.0;
      int f = 0;
      for (int j = 0; j < d; ++j) {
        if (state[j] == 0) {
          reduced[i][f++] = centers[i][j];
        } else {
          const double b = state[j] == 1 ? box.lo[j] : box.hi[j];
          weights[i] += (b - centers[i][j]) * (b - centers[i][j]);
        }
      }
    }
    const CenterSolution sol = weighted_one_center(reduced, weights);
    Vec x(d);
    bool feasible = true;
    int f = 0;
    for (int j = 0; j < d; ++j) {
      if (state[j] == 0) {
        const double yj = sol.y[f++];
        const double tol = 1e-12 * (1.0 + std::abs(yj));
        if (yj < box.lo[j] - tol || yj > box.hi[j] + tol) feasible = false;
        x[j] = std::clamp(yj, box.lo[j], box.hi[j]);
      } else {
        x[j] = state[j] == 1 ? box.lo[j] : box.hi[j];
      }
    }
    if (feasible) best = std::min(best, sol.value2);
    // The clamped candidate is always attainable and bounds the optimum.
    best = std::min(best, weighted_value(centers, zeros, x));
  }
  return best;
}

inline Certainty classify(double min_radius, double r, const KwiseOptions& opt) {
  if (min_radius <= r - opt.eps_feas) return Certainty::Nonempty;
  if (min_radius > r + opt.eps_feas) return Certainty::Empty;
  if (opt.strict) return Certainty::Indeterminate;
  return Certainty::Nonempty;
}

/// Convex search over the common time interval of pieces that are linear on
/// it. g(u) = min_{x in box} max_i |x - c_i(u)| is convex in u.
inline KwiseResult solve_cell(std::span<const Piece> pieces, double lo, double hi, double r,
                              const Box& window, const KwiseOptions& opt) {
  std::vector<Vec> centers(pieces.size());
  auto g = [&](double u) {
    for (std::size_t i = 0; i < pieces.size(); ++i) centers[i] = pieces[i].position(u);
    return std::sqrt(box_one_center2(centers, window));
  };
  KwiseResult res;
  auto consider = [&](double u, double val) {
    if (val < res.min_radius) {
      res.min_radius = val;
      res.u = u;
    }
    return val <= r - opt.eps_feas;
  };
  const double ga = g(lo);
  if (consider(lo, ga)) return res;
  if (hi > lo) {
    const double gb = g(hi);
    if (consider(hi, gb)) return res;
    const double tol = opt.rel_time_tol * opt.time_scale;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = g(x1), f2 = g(x2);
    if (consider(x1, f1) || consider(x2, f2)) return res;
    while (b - a > tol) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - phi * (b - a);
        f1 = g(x1);
        if (consider(x1, f1)) return res;
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + phi * (b - a);
        f2 = g(x2);
        if (consider(x2, f2)) return res;
      }
    }
  }
  return res;
}

}  // namespace detail

/// Decides whether closed pieces (linear trajectories with radius r over
/// their own time intervals) have a common point inside window x [0, T].
inline KwiseResult kwise_intersection(std::span<const Piece> pieces, double r, const Box& window,
                                      const KwiseOptions& opt = {}) {
  require(!pieces.empty(), "kwise_intersection: empty list");
  KwiseResult res;
  double lo = -detail::kInf, hi = detail::kInf;
  for (const Piece& p : pieces) {
    lo = std::max(lo, p.t0);
    hi = std::min(hi, p.t1);
  }
  if (lo > hi) return res;

  // Bounding-box rejection with a margin well above the feasibility slack.
  const double margin = r + 4.0 * opt.eps_feas;
  Box common = window;
  for (const Piece& p : pieces) {
    const Box b = swept_box(p, margin);
    for (int i = 0; i < common.dim(); ++i) {
      common.lo[i] = std::max(common.lo[i], b.lo[i]);
      common.hi[i] = std::min(common.hi[i], b.hi[i]);
      if (common.lo[i] > common.hi[i]) return res;
    }
  }

  res = detail::solve_cell(pieces, lo, hi, r, window, opt);
  res.status = detail::classify(res.min_radius, r, opt);
  return res;
}

/// Common-intersection test for whole cylinders or stacks: the time axis is
/// split on the merged breakpoint grid so every body is linear on each cell.
inline KwiseResult kwise_intersection(std::span<const Body> bodies, const Box& window,
                                      const KwiseOptions& opt = {}) {
  require(!bodies.empty(), "kwise_intersection: empty list");
  const double r = radius_of(bodies.front());
  std::vector<std::vector<Piece>> tracks;
  std::vector<double> grid;
  for (const Body& b : bodies) {
    tracks.push_back(pieces_of(b));
    for (const Piece& p : tracks.back()) {
      grid.push_back(p.t0);
      grid.push_back(p.t1);
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  KwiseResult best;
  std::vector<Piece> cell(bodies.size());
  std::vector<std::size_t> cursor(bodies.size(), 0);
  for (std::size_t c = 0; c + 1 < grid.size(); ++c) {
    const double a = grid[c], b = grid[c + 1];
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      while (tracks[i][cursor[i]].t1 <= a && cursor[i] + 1 < tracks[i].size()) ++cursor[i];
      Piece p = tracks[i][cursor[i]];
      p.start = p.position(a);
      p.t0 = a;
      p.t1 = b;
      cell[i] = p;
    }
    KwiseResult res = kwise_intersection(std::span<const Piece>(cell), r, window, opt);
    if (res.min_radius < best.min_radius) best = res;
    if (best.min_radius <= r - opt.eps_feas) break;
  }
  best.status = detail::classify(best.min_radius, r, opt);
  return best;
}

inline bool kwise_intersection_nonempty(std::span<const Body> bodies, const Box& window,
                                        const KwiseOptions& opt = {}) {
  return kwise_intersection(bodies, window, opt).nonempty();
}

}  // namespace tbc

#endif  // TBC_KWISE_HPP
