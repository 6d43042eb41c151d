#ifndef TBC_GEOMETRY_HPP
#define TBC_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <variant>
#include <vector>

#include "tbc/errors.hpp"
#include "tbc/params.hpp"
#include "tbc/vec.hpp"

namespace tbc {

/// Linear stretch of a trajectory: the cross-section ball is centred at
/// start + (u - t0) * velocity for u in [t0, t1].
struct Piece {
  Vec start;
  Vec velocity;
  double t0 = 0.0;
  double t1 = 0.0;

  Vec position(double u) const { return start + (u - t0) * velocity; }
  Vec end() const { return position(t1); }
};

/// Closest approach of two trajectories: minimal distance between the two
/// centres and a time attaining it.
struct Approach {
  double distance = std::numeric_limits<double>::infinity();
  double u = 0.0;
};

/// Minimum of |a(u) - b(u)| over the common time interval of two pieces, in
/// closed form. Returns an infinite distance when the intervals are disjoint.
inline Approach closest_approach(const Piece& a, const Piece& b) {
  const double lo = std::max(a.t0, b.t0);
  const double hi = std::min(a.t1, b.t1);
  if (lo > hi) return {};
  const Vec dp = a.position(lo) - b.position(lo);
  const Vec dmu = a.velocity - b.velocity;
  const double m2 = norm2(dmu);
  double w = 0.0;
  if (m2 > 0.0) w = std::clamp(-dot(dp, dmu) / m2, 0.0, hi - lo);
  return {norm(dp + w * dmu), lo + w};
}

/// Time bounded cylinder Cyl(p, v) with radius r over [0, T].
class Cylinder {
 public:
  Cylinder() = default;
  Cylinder(Vec basepoint, Direction dir, double radius, double horizon)
      : p_(basepoint), dir_(dir), r_(radius), T_(horizon) {
    require(p_.size() == dir_.dim(), "Cylinder: basepoint/direction dimension mismatch");
    require(r_ >= 0.0 && T_ > 0.0, "Cylinder: need r >= 0 and T > 0");
  }

  const Vec& basepoint() const { return p_; }
  const Direction& direction() const { return dir_; }
  double radius() const { return r_; }
  double horizon() const { return T_; }
  int dim() const { return p_.size(); }

  Vec position_at(double u) const {
    require(u >= 0.0 && u <= T_, "position_at: time outside [0, T]");
    return p_ + u * dir_.velocity();
  }

  Piece piece() const { return {p_, dir_.velocity(), 0.0, T_}; }

 private:
  Vec p_;
  Direction dir_;
  double r_ = 0.0;
  double T_ = 1.0;
};

/// Cylinder stack: a node that follows direction v_k on [t_k, t_{k+1}].
class CylinderStack {
 public:
  CylinderStack() = default;
  /// `breakpoints` is the full grid t_0 = 0 < ... < t_{K+1} = T and
  /// `directions` holds v_0..v_K.
  CylinderStack(Vec basepoint, std::vector<double> breakpoints, std::vector<Direction> directions,
                double radius)
      : p_(basepoint), times_(std::move(breakpoints)), dirs_(std::move(directions)), r_(radius) {
    require(times_.size() >= 2, "CylinderStack: need at least t_0 and t_{K+1}");
    require(dirs_.size() + 1 == times_.size(), "CylinderStack: need one direction per segment");
    require(times_.front() == 0.0, "CylinderStack: t_0 must be 0");
    for (std::size_t k = 1; k < times_.size(); ++k)
      require(times_[k] > times_[k - 1], "CylinderStack: breakpoints must be strictly increasing");
    for (const auto& v : dirs_) require(v.dim() == p_.size(), "CylinderStack: dimension mismatch");
    require(r_ >= 0.0, "CylinderStack: r must be >= 0");
    waypoints_.reserve(times_.size());
    waypoints_.push_back(p_);
    for (std::size_t k = 0; k < dirs_.size(); ++k)
      waypoints_.push_back(waypoints_.back() + (times_[k + 1] - times_[k]) * dirs_[k].velocity());
  }

  const Vec& basepoint() const { return p_; }
  const std::vector<double>& breakpoints() const { return times_; }
  const std::vector<Direction>& directions() const { return dirs_; }
  /// Spatial position at t_k, k = 0..K+1.
  const std::vector<Vec>& waypoints() const { return waypoints_; }
  double radius() const { return r_; }
  double horizon() const { return times_.back(); }
  int segments() const { return static_cast<int>(dirs_.size()); }
  int dim() const { return p_.size(); }

  int segment_of(double u) const {
    auto it = std::upper_bound(times_.begin() + 1, times_.end() - 1, u);
    return static_cast<int>(it - times_.begin()) - 1;
  }

  Vec position_at(double u) const {
    require(u >= 0.0 && u <= horizon(), "position_at: time outside [0, T]");
    const int k = segment_of(u);
    return waypoints_[k] + (u - times_[k]) * dirs_[k].velocity();
  }

  Piece piece(int k) const { return {waypoints_[k], dirs_[k].velocity(), times_[k], times_[k + 1]}; }

 private:
  Vec p_;
  std::vector<double> times_;
  std::vector<Direction> dirs_;
  std::vector<Vec> waypoints_;
  double r_ = 0.0;
};

using Body = std::variant<Cylinder, CylinderStack>;

inline std::vector<Piece> pieces_of(const Cylinder& c) { return {c.piece()}; }
inline std::vector<Piece> pieces_of(const CylinderStack& c) {
  std::vector<Piece> out;
  out.reserve(c.segments());
  for (int k = 0; k < c.segments(); ++k) out.push_back(c.piece(k));
  return out;
}
inline std::vector<Piece> pieces_of(const Body& b) {
  return std::visit([](const auto& x) { return pieces_of(x); }, b);
}
inline const Vec& basepoint_of(const Body& b) {
  return std::visit([](const auto& x) -> const Vec& { return x.basepoint(); }, b);
}
inline Vec position_at(const Body& b, double u) {
  return std::visit([u](const auto& x) { return x.position_at(u); }, b);
}
inline double radius_of(const Body& b) {
  return std::visit([](const auto& x) { return x.radius(); }, b);
}

/// Spatial part of the v-shadow x - (x_{d+1} / v_{d+1}) v of a space-time
/// point x. A cylinder with direction v covers x iff its basepoint lies within
/// distance r of the shadow.
inline Vec v_shadow(const Vec& x, const Direction& v) {
  const int d = v.dim();
  require(x.size() == d + 1, "v_shadow: point must be in R^d x [0, T]");
  const double u = x[d];
  Vec out(d);
  for (int i = 0; i < d; ++i) out[i] = x[i] - u * v.velocity()[i];
  return out;
}

/// Closed-cylinder membership of the space-time point x = (x_1..x_d, u).
template <typename Shape>
bool contains_point(const Shape& c, const Vec& x) {
  const int d = c.dim();
  require(x.size() == d + 1, "contains_point: point must be in R^d x [0, T]");
  const double u = x[d];
  if (u < 0.0 || u > c.horizon()) return false;
  return dist2(x.head(d), c.position_at(u)) <= c.radius() * c.radius();
}

inline bool contains_point(const Body& b, const Vec& x) {
  return std::visit([&x](const auto& c) { return contains_point(c, x); }, b);
}

/// Closest approach of two single-direction cylinders. With dp = p_a - p_b
/// and dmu = mu_a - mu_b the minimiser is clamp(-(dp.dmu)/|dmu|^2, 0, T).
inline Approach closest_approach(const Cylinder& a, const Cylinder& b) {
  return closest_approach(a.piece(), b.piece());
}

/// Closest approach of two stacks, taken segment-wise over the merged
/// breakpoint grid of both stacks.
template <typename A, typename B>
Approach closest_approach_tracks(const A& pa, const B& pb) {
  Approach best;
  std::size_t j = 0;
  for (const Piece& a : pa) {
    while (j < pb.size() && pb[j].t1 < a.t0) ++j;
    for (std::size_t k = j; k < pb.size() && pb[k].t0 <= a.t1; ++k) {
      const Approach c = closest_approach(a, pb[k]);
      if (c.distance < best.distance) best = c;
    }
  }
  return best;
}

inline Approach closest_approach(const CylinderStack& a, const CylinderStack& b) {
  return closest_approach_tracks(pieces_of(a), pieces_of(b));
}

inline bool pairwise_intersects(const Cylinder& a, const Cylinder& b) {
  const double r = a.radius();
  return closest_approach(a, b).distance <= 2.0 * r;
}

inline bool pairwise_intersects_stacked(const CylinderStack& a, const CylinderStack& b) {
  const double r = a.radius();
  return closest_approach(a, b).distance <= 2.0 * r;
}

/// Spatial axis-aligned box; infinite bounds are allowed.
struct Box {
  Vec lo;
  Vec hi;

  static Box cube(int d, double half) { return {Vec(d, -half), Vec(d, half)}; }
  static Box everywhere(int d) {
    const double inf = std::numeric_limits<double>::infinity();
    return {Vec(d, -inf), Vec(d, inf)};
  }
  int dim() const { return lo.size(); }
  bool contains(const Vec& x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  bool overlaps(const Box& o) const {
    for (int i = 0; i < dim(); ++i)
      if (o.hi[i] < lo[i] || o.lo[i] > hi[i]) return false;
    return true;
  }
  bool inside(const Box& o) const {
    for (int i = 0; i < dim(); ++i)
      if (lo[i] < o.lo[i] || hi[i] > o.hi[i]) return false;
    return true;
  }
};

/// Spatial bounding box of the swept cross-section ball of a piece.
inline Box swept_box(const Piece& p, double r) {
  const Vec a = p.start;
  const Vec b = p.end();
  Box box{Vec(a.size()), Vec(a.size())};
  for (int i = 0; i < a.size(); ++i) {
    box.lo[i] = std::min(a[i], b[i]) - r;
    box.hi[i] = std::max(a[i], b[i]) + r;
  }
  return box;
}

inline Box swept_box(const std::vector<Piece>& ps, double r) {
  Box box = swept_box(ps.front(), r);
  for (std::size_t k = 1; k < ps.size(); ++k) {
    const Box b = swept_box(ps[k], r);
    for (int i = 0; i < box.dim(); ++i) {
      box.lo[i] = std::min(box.lo[i], b.lo[i]);
      box.hi[i] = std::max(box.hi[i], b.hi[i]);
    }
  }
  return box;
}

}  // namespace tbc

#endif  // TBC_GEOMETRY_HPP
