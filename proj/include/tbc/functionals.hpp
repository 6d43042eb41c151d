#ifndef TBC_FUNCTIONALS_HPP
#define TBC_FUNCTIONALS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tbc/errors.hpp"
#include "tbc/geometry.hpp"
#include "tbc/kwise.hpp"
#include "tbc/rng.hpp"
#include "tbc/sampling.hpp"
#include "tbc/spatial_grid.hpp"

namespace tbc {

enum class FunctionalKind { Volume, IsolatedCount, EulerCharacteristic };

inline std::string kind_name(FunctionalKind k) {
  switch (k) {
    case FunctionalKind::Volume: return "volume";
    case FunctionalKind::IsolatedCount: return "isolated";
    default: return "euler";
  }
}

inline FunctionalKind parse_kind(const std::string& s) {
  if (s == "volume") return FunctionalKind::Volume;
  if (s == "isolated" || s == "iso") return FunctionalKind::IsolatedCount;
  if (s == "euler" || s == "chi") return FunctionalKind::EulerCharacteristic;
  throw ContractViolation("unknown functional kind '" + s + "'");
}

struct EstimatorMeta {
  std::size_t M = 0;         // integration points (volume)
  double se = 0.0;           // Monte Carlo standard error (volume)
  std::size_t nerve_size = 0;  // simplices in the nerve (euler)
  std::size_t indeterminate_simplices = 0;
  bool indeterminate = false;
  /// Euler value obtained when every near-tangent simplex is dropped.
  std::optional<double> alternative_value;
  /// Euler characteristic of stacks is computed on per-segment pieces.
  bool experimental = false;
};

struct FunctionalResult {
  FunctionalKind kind = FunctionalKind::Volume;
  double value = 0.0;
  EstimatorMeta meta;
};

/// Knobs shared by the estimators; the integration stream is identified by
/// (mc_seed, mc_replication) so repeated evaluations see the same points.
struct EstimatorSettings {
  std::size_t M = 100000;
  std::uint64_t mc_seed = 0;
  std::uint64_t mc_replication = 0;
  KwiseOptions kwise{};
};

namespace detail {

struct FlatPieces {
  std::vector<Piece> pieces;
  std::vector<int> owner;
};

inline FlatPieces flatten(const std::vector<Body>& bodies) {
  FlatPieces out;
  for (std::size_t b = 0; b < bodies.size(); ++b) {
    for (Piece& p : pieces_of(bodies[b])) {
      out.pieces.push_back(std::move(p));
      out.owner.push_back(static_cast<int>(b));
    }
  }
  return out;
}

inline Box window_box(const ModelParams& p) { return Box::cube(p.d, 0.5 * p.s); }

/// Point-coverage index over the observation window.
class CoverageIndex {
 public:
  CoverageIndex(const std::vector<Body>& bodies, const ModelParams& params)
      : flat_(flatten(bodies)), r2_(params.r * params.r),
        grid_(window_box(params), std::max(params.r, params.s / 512.0)) {
    const Box win = window_box(params);
    for (std::size_t i = 0; i < flat_.pieces.size(); ++i) {
      const Box b = swept_box(flat_.pieces[i], params.r);
      if (b.overlaps(win)) grid_.insert(static_cast<int>(i), b);
    }
  }

  bool covers(const Vec& x, double u) const {
    for (int id : grid_.at(x)) {
      const Piece& p = flat_.pieces[id];
      if (u < p.t0 || u > p.t1) continue;
      if (dist2(x, p.position(u)) <= r2_) return true;
    }
    return false;
  }

 private:
  FlatPieces flat_;
  double r2_;
  SpatialGrid grid_;
};

/// Hit count of M uniform points of W_s drawn from the given stream.
inline std::size_t count_hits(const std::vector<Body>& bodies, const ModelParams& params, std::size_t M,
                              Engine rng) {
  const CoverageIndex index(bodies, params);
  std::uniform_real_distribution<double> ux(-0.5 * params.s, 0.5 * params.s);
  std::uniform_real_distribution<double> ut(0.0, params.T);
  std::size_t hits = 0;
  Vec x(params.d);
  for (std::size_t k = 0; k < M; ++k) {
    for (int i = 0; i < params.d; ++i) x[i] = ux(rng);
    const double u = ut(rng);
    if (index.covers(x, u)) ++hits;
  }
  return hits;
}

inline FunctionalResult volume_from_hits(const ModelParams& params, std::size_t hits, std::size_t M) {
  const double lambda = params.window_volume();
  const double p = static_cast<double>(hits) / static_cast<double>(M);
  FunctionalResult res{FunctionalKind::Volume, lambda * p, {}};
  res.meta.M = M;
  res.meta.se = lambda * std::sqrt(p * (1.0 - p) / static_cast<double>(M));
  return res;
}

inline bool in_spatial_window(const Vec& p, double s) {
  for (int i = 0; i < p.size(); ++i)
    if (p[i] < -0.5 * s || p[i] > 0.5 * s) return false;
  return true;
}

}  // namespace detail

/// Hit-or-miss estimate of lambda_{d+1}(Z cap W_s).
inline FunctionalResult covered_volume_mc(const CylinderSample& sample, std::size_t M, Engine& rng) {
  require(M >= 1, "covered_volume_mc: need M >= 1");
  const Engine stream = rng;
  rng.discard(1);
  return detail::volume_from_hits(sample.params, detail::count_hits(sample.cylinders, sample.params, M, stream), M);
}

inline FunctionalResult covered_volume_mc(const CylinderSample& sample, const EstimatorSettings& st) {
  require(st.M >= 1, "covered_volume_mc: need M >= 1");
  const Engine stream = make_stream(st.mc_seed, st.mc_replication, Stream::Integration);
  return detail::volume_from_hits(sample.params, detail::count_hits(sample.cylinders, sample.params, st.M, stream), st.M);
}

namespace detail {

inline long isolated_count_bodies(const std::vector<Body>& bodies, const ModelParams& params) {
  const double r = params.r;
  std::vector<std::vector<Piece>> tracks;
  std::vector<Box> boxes;
  tracks.reserve(bodies.size());
  for (const Body& b : bodies) {
    tracks.push_back(pieces_of(b));
    boxes.push_back(swept_box(tracks.back(), r));
  }
  if (bodies.empty()) return 0;
  Box region = boxes.front();
  for (const Box& b : boxes)
    for (int i = 0; i < region.dim(); ++i) {
      region.lo[i] = std::min(region.lo[i], b.lo[i]);
      region.hi[i] = std::max(region.hi[i], b.hi[i]);
    }
  for (int i = 0; i < region.dim(); ++i) region.hi[i] = std::max(region.hi[i], region.lo[i] + 1e-9);
  SpatialGrid grid(region, std::max(2.0 * r, 0.5 * params.max_scope()));
  for (std::size_t i = 0; i < boxes.size(); ++i) grid.insert(static_cast<int>(i), boxes[i]);

  long count = 0;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    if (!in_spatial_window(basepoint_of(bodies[i]), params.s)) continue;
    bool isolated = true;
    grid.for_each_near(boxes[i], [&](int j) {
      if (!isolated || j == static_cast<int>(i)) return;
      if (!boxes[i].overlaps(boxes[j])) return;
      // Basepoints further apart than 2 (R_h + r) never interact.
      if (dist(basepoint_of(bodies[i]), basepoint_of(bodies[j])) > params.interaction_radius()) return;
      if (closest_approach_tracks(tracks[i], tracks[j]).distance <= 2.0 * r) isolated = false;
    });
    if (isolated) ++count;
  }
  return count;
}

}  // namespace detail

/// Number of cylinders with basepoint in [-s/2, s/2]^d that meet no other
/// cylinder of the sample (neighbours on the dilated window included).
inline FunctionalResult isolated_count(const CylinderSample& sample) {
  FunctionalResult res{FunctionalKind::IsolatedCount, 0.0, {}};
  res.value = static_cast<double>(detail::isolated_count_bodies(sample.cylinders, sample.params));
  return res;
}

namespace detail {

inline constexpr std::size_t kMaxSimplexSize = 12;

struct NerveOutcome {
  long chi = 0;
  std::size_t simplices = 0;
};

/// Nerve of convex pieces clipped to the window: vertices are pieces meeting
/// W_s, higher simplices are certified common intersections.
class NerveBuilder {
 public:
  NerveBuilder(const std::vector<Body>& bodies, const ModelParams& params, const KwiseOptions& base)
      : params_(params), window_(window_box(params)), opt_(base) {
    opt_.strict = true;
    opt_.time_scale = params.T;
    const FlatPieces flat = flatten(bodies);
    const double r = params.r;
    for (std::size_t i = 0; i < flat.pieces.size(); ++i) {
      const Piece& p = flat.pieces[i];
      const Box b = swept_box(p, r);
      if (!b.overlaps(window_)) continue;
      Certainty c = Certainty::Nonempty;
      if (!b.inside(window_)) c = kwise_intersection(std::span<const Piece>(&p, 1), r, window_, opt_).status;
      if (c == Certainty::Empty) continue;
      if (c == Certainty::Indeterminate) ++indeterminate_;
      pieces_.push_back(p);
      vertex_status_.push_back(c);
    }
    adj_.assign(pieces_.size(), {});
    if (pieces_.empty()) return;
    SpatialGrid grid(window_, std::max(2.0 * r, params.s / 256.0));
    std::vector<Box> boxes;
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      boxes.push_back(swept_box(pieces_[i], r + 4.0 * opt_.eps_feas));
      grid.insert(static_cast<int>(i), boxes.back());
    }
    std::vector<int> seen(pieces_.size(), -1);
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      grid.for_each_near(boxes[i], [&](int j) {
        if (j <= static_cast<int>(i) || seen[j] == static_cast<int>(i)) return;
        seen[j] = static_cast<int>(i);
        if (!boxes[i].overlaps(boxes[j])) return;
        if (closest_approach(pieces_[i], pieces_[j]).distance > 2.0 * r + 8.0 * opt_.eps_feas) return;
        const Piece pair[2] = {pieces_[i], pieces_[j]};
        const Certainty c = kwise_intersection(std::span<const Piece>(pair, 2), r, window_, opt_).status;
        if (c == Certainty::Empty) return;
        if (c == Certainty::Indeterminate) ++indeterminate_;
        adj_[i].push_back({j, c});
      });
      std::sort(adj_[i].begin(), adj_[i].end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    }
  }

  std::size_t indeterminate_low_order() const { return indeterminate_; }

  /// Inclusion-exclusion over the nerve; near-tangent simplices are kept when
  /// `keep_indeterminate` and dropped otherwise. Returns the number of
  /// indeterminate higher-order tests through `higher_indeterminate`.
  NerveOutcome evaluate(bool keep_indeterminate, std::size_t& higher_indeterminate) const {
    NerveOutcome out;
    higher_indeterminate = 0;
    auto accept = [&](Certainty c) {
      return c == Certainty::Nonempty || (c == Certainty::Indeterminate && keep_indeterminate);
    };
    std::vector<int> sigma;
    std::vector<Piece> members;
    for (std::size_t v = 0; v < pieces_.size(); ++v) {
      if (!accept(vertex_status_[v])) continue;
      std::vector<int> cands;
      for (const auto& [w, c] : adj_[v])
        if (accept(c) && accept(vertex_status_[w])) cands.push_back(w);
      sigma.assign(1, static_cast<int>(v));
      extend(sigma, cands, out, accept, higher_indeterminate);
    }
    return out;
  }

 private:
  bool adjacent(int a, int b, const auto& accept) const {
    const auto& row = adj_[a];
    auto it = std::lower_bound(row.begin(), row.end(), b, [](const auto& e, int key) { return e.first < key; });
    return it != row.end() && it->first == b && accept(it->second);
  }

  template <typename Accept>
  void extend(std::vector<int>& sigma, const std::vector<int>& cands, NerveOutcome& out, const Accept& accept,
              std::size_t& higher_indeterminate) const {
    out.chi += (sigma.size() % 2 == 1) ? 1 : -1;
    ++out.simplices;
    for (std::size_t a = 0; a < cands.size(); ++a) {
      const int w = cands[a];
      Certainty c = Certainty::Nonempty;
      if (sigma.size() >= 2) {
        std::vector<Piece> members;
        for (int m : sigma) members.push_back(pieces_[m]);
        members.push_back(pieces_[w]);
        c = kwise_intersection(std::span<const Piece>(members), params_.r, window_, opt_).status;
        if (c == Certainty::Indeterminate) ++higher_indeterminate;
        if (!accept(c)) continue;
        if (sigma.size() + 1 > kMaxSimplexSize)
          throw CliqueLimitExceeded("nerve simplex larger than " + std::to_string(kMaxSimplexSize) + " pieces");
      }
      std::vector<int> next;
      for (std::size_t b = a + 1; b < cands.size(); ++b)
        if (adjacent(w, cands[b], accept)) next.push_back(cands[b]);
      sigma.push_back(w);
      extend(sigma, next, out, accept, higher_indeterminate);
      sigma.pop_back();
    }
  }

  ModelParams params_;
  Box window_;
  KwiseOptions opt_;
  std::vector<Piece> pieces_;
  std::vector<Certainty> vertex_status_;
  std::vector<std::vector<std::pair<int, Certainty>>> adj_;
  std::size_t indeterminate_ = 0;
};

}  // namespace detail

/// chi(Z cap W_s) by inclusion-exclusion over the nerve of the convex pieces
/// (whole cylinders, or per-segment pieces of stacks) clipped to the window.
inline FunctionalResult euler_characteristic(const CylinderSample& sample, const KwiseOptions& opt = {}) {
  const detail::NerveBuilder nerve(sample.cylinders, sample.params, opt);
  std::size_t higher = 0;
  const detail::NerveOutcome keep = nerve.evaluate(true, higher);
  FunctionalResult res{FunctionalKind::EulerCharacteristic, static_cast<double>(keep.chi), {}};
  res.meta.nerve_size = keep.simplices;
  res.meta.indeterminate_simplices = nerve.indeterminate_low_order() + higher;
  res.meta.experimental = std::any_of(sample.cylinders.begin(), sample.cylinders.end(),
                                      [](const Body& b) { return std::holds_alternative<CylinderStack>(b); });
  if (res.meta.indeterminate_simplices > 0) {
    res.meta.indeterminate = true;
    std::size_t unused = 0;
    res.meta.alternative_value = static_cast<double>(nerve.evaluate(false, unused).chi);
  }
  return res;
}

namespace detail {

/// Shallowest rate at which the centre distance of two pieces may cross 2r
/// inside the window before the sliver between them is left to the grid.
inline constexpr double kMinSeparationRate = 0.5;

/// The centre distance of a and b crosses 2r at a rate below
/// kMinSeparationRate, with the touching point inside the window.
inline bool slow_separation(const Piece& a, const Piece& b, const ModelParams& p) {
  const double lo = std::max(a.t0, b.t0), hi = std::min(a.t1, b.t1);
  if (lo > hi) return false;
  const Vec dp = a.position(lo) - b.position(lo);
  const Vec dm = a.velocity - b.velocity;
  const double qa = norm2(dm), qb = 2.0 * dot(dp, dm), qc = norm2(dp) - 4.0 * p.r * p.r;
  if (qa <= 0.0) return false;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return false;
  for (double sign : {-1.0, 1.0}) {
    const double w = (-qb + sign * std::sqrt(disc)) / (2.0 * qa);
    if (w < 0.0 || w > hi - lo) continue;
    const Vec gap = dp + w * dm;
    const double rate = std::abs(dot(gap, dm)) / (2.0 * p.r);
    if (rate >= kMinSeparationRate) continue;
    if (in_spatial_window(0.5 * (a.position(lo + w) + b.position(lo + w)), p.s)) return true;
  }
  return false;
}

/// True when some pair of pieces separates slowly through distance 2r, or
/// when some set of pieces has a window-constrained common radius within one
/// diagonal of r (for a pair: centre distance within two diagonals of 2r).
/// Either leaves features thinner than the grid.
inline bool near_critical(const CylinderSample& sample, double diagonal) {
  const ModelParams& p = sample.params;
  const FlatPieces flat = flatten(sample.cylinders);
  const std::size_t n = flat.pieces.size();
  const double reach = 2.0 * (p.r + diagonal);
  std::vector<std::vector<char>> near(n, std::vector<char>(n, 0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double dd = closest_approach(flat.pieces[a], flat.pieces[b]).distance;
      if (!std::isfinite(dd)) continue;
      if (flat.owner[a] != flat.owner[b] && slow_separation(flat.pieces[a], flat.pieces[b], p)) return true;
      near[a][b] = near[b][a] = dd <= reach;
    }
  const Box win = window_box(p);
  KwiseOptions opt;
  opt.time_scale = p.T;
  opt.rel_time_tol = 1e-12;
  std::vector<Piece> members;
  bool hit = false;
  auto visit = [&](auto&& self, const std::vector<int>& cands) -> void {
    double lo = -kInf, hi = kInf;
    for (const Piece& q : members) {
      lo = std::max(lo, q.t0);
      hi = std::min(hi, q.t1);
    }
    if (lo > hi) return;
    const double rho = solve_cell(members, lo, hi, -1.0, win, opt).min_radius;
    if (std::abs(rho - p.r) < diagonal) {
      hit = true;
      return;
    }
    if (rho > p.r + diagonal) return;
    for (std::size_t k = 0; k < cands.size() && !hit; ++k) {
      std::vector<int> next;
      for (std::size_t m = k + 1; m < cands.size(); ++m)
        if (near[cands[k]][cands[m]]) next.push_back(cands[m]);
      members.push_back(flat.pieces[cands[k]]);
      self(self, next);
      members.pop_back();
    }
  };
  for (std::size_t a = 0; a < n && !hit; ++a) {
    std::vector<int> cands;
    for (std::size_t b = a + 1; b < n; ++b)
      if (near[a][b]) cands.push_back(static_cast<int>(b));
    members.assign(1, flat.pieces[a]);
    visit(visit, cands);
  }
  return hit;
}

}  // namespace detail

struct VoxelOracleResult {
  long chi = 0;
  /// Some pair or larger set of pieces is within a few voxel diagonals of
  /// tangency (see detail::near_critical); the voxel value may then differ
  /// from the exact one.
  bool unreliable = false;
  std::size_t occupied = 0;
};

/// Euler characteristic of the cubical complex on the voxels whose centres
/// are covered, by the alternating count of its cells. Ambient dimension 2 or
/// 3 only. Independent of the nerve code path.
inline VoxelOracleResult euler_characteristic_voxel_oracle(const CylinderSample& sample, double resolution) {
  const ModelParams& p = sample.params;
  require(p.d + 1 <= 3, "voxel oracle: ambient dimension must be 2 or 3");
  require(resolution > 0.0, "voxel oracle: resolution must be positive");
  const int D = p.d + 1;
  std::array<int, 3> n{1, 1, 1};
  std::array<double, 3> step{};
  std::array<double, 3> origin{};
  for (int a = 0; a < D; ++a) {
    const double extent = a < p.d ? p.s : p.T;
    n[a] = std::max(1, static_cast<int>(std::ceil(extent / resolution - 1e-9)));
    step[a] = extent / n[a];
    origin[a] = a < p.d ? -0.5 * p.s : 0.0;
  }
  const std::size_t total = static_cast<std::size_t>(n[0]) * n[1] * n[2];
  std::vector<unsigned char> occ(total, 0);
  auto cell_index = [&](int i, int j, int k) { return (static_cast<std::size_t>(k) * n[1] + j) * n[0] + i; };

  VoxelOracleResult out;
  {
    std::vector<Body> bodies = sample.cylinders;
    const detail::CoverageIndex index(bodies, p);
    Vec x(p.d);
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          const std::array<int, 3> c{i, j, k};
          for (int a = 0; a < p.d; ++a) x[a] = origin[a] + (c[a] + 0.5) * step[a];
          const double u = origin[p.d] + (c[p.d] + 0.5) * step[p.d];
          if (index.covers(x, u)) {
            occ[cell_index(i, j, k)] = 1;
            ++out.occupied;
          }
        }
  }
  auto occupied = [&](int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= n[0] || j >= n[1] || k >= n[2]) return false;
    return occ[cell_index(i, j, k)] != 0;
  };

  // Occupied voxel centres are the vertices; a unit cube spanned by the axes
  // in `mask` belongs to the complex iff all of its corner voxels are occupied.
  long chi = 0;
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        if (!occupied(i, j, k)) continue;
        for (int mask = 0; mask < (1 << D); ++mask) {
          bool present = true;
          for (int corner = 0; corner < (1 << D) && present; ++corner) {
            if ((corner & ~mask) != 0) continue;
            present = occupied(i + (corner & 1), j + (corner >> 1 & 1), k + (corner >> 2 & 1));
          }
          if (present) chi += __builtin_popcount(mask) % 2 == 0 ? 1 : -1;
        }
      }
  out.chi = chi;

  double diag2 = 0.0;
  for (int a = 0; a < D; ++a) diag2 += step[a] * step[a];
  out.unreliable = detail::near_critical(sample, std::sqrt(diag2));
  return out;
}

/// Evaluates one functional on an explicit body list (sharing sample params).
inline FunctionalResult evaluate_functional(FunctionalKind kind, const CylinderSample& sample,
                                            const EstimatorSettings& st) {
  switch (kind) {
    case FunctionalKind::Volume: return covered_volume_mc(sample, st);
    case FunctionalKind::IsolatedCount: return isolated_count(sample);
    default: return euler_characteristic(sample, st.kwise);
  }
}

namespace detail {

inline CylinderSample with_extra(const CylinderSample& s, std::initializer_list<const Body*> extra) {
  CylinderSample out = s;
  for (const Body* b : extra) {
    require(radius_of(*b) == s.params.r, "add_one_cost: extra must share the sample radius");
    out.cylinders.push_back(*b);
  }
  return out;
}

inline double exact_value(FunctionalKind kind, const CylinderSample& s, const EstimatorSettings& st) {
  if (kind == FunctionalKind::Volume) {
    const Engine stream = make_stream(st.mc_seed, st.mc_replication, Stream::Integration);
    return static_cast<double>(count_hits(s.cylinders, s.params, st.M, stream));
  }
  return evaluate_functional(kind, s, st).value;
}

inline double volume_scale(FunctionalKind kind, const ModelParams& p, const EstimatorSettings& st) {
  return kind == FunctionalKind::Volume ? p.window_volume() / static_cast<double>(st.M) : 1.0;
}

}  // namespace detail

/// D_x f = f(xi + delta_x) - f(xi). For the volume both evaluations use the
/// same integration points, so the difference is exact in the estimator.
inline double add_one_cost(FunctionalKind kind, const CylinderSample& sample, const Body& extra,
                           const EstimatorSettings& st = {}) {
  const CylinderSample plus = detail::with_extra(sample, {&extra});
  const double diff = detail::exact_value(kind, plus, st) - detail::exact_value(kind, sample, st);
  return diff * detail::volume_scale(kind, sample.params, st);
}

/// D^2_{x,y} f = f(xi + x + y) - f(xi + x) - f(xi + y) + f(xi).
inline double second_difference(FunctionalKind kind, const CylinderSample& sample, const Body& x, const Body& y,
                                const EstimatorSettings& st = {}) {
  const double fxy = detail::exact_value(kind, detail::with_extra(sample, {&x, &y}), st);
  const double fx = detail::exact_value(kind, detail::with_extra(sample, {&x}), st);
  const double fy = detail::exact_value(kind, detail::with_extra(sample, {&y}), st);
  const double f0 = detail::exact_value(kind, sample, st);
  return ((fxy - fx) - (fy - f0)) * detail::volume_scale(kind, sample.params, st);
}

}  // namespace tbc

#endif  // TBC_FUNCTIONALS_HPP
