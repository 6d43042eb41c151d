#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tbc/geometry.hpp"
#include "tbc/kwise.hpp"
#include "tbc/params.hpp"
#include "tbc/rng.hpp"
#include "tbc/sampling.hpp"

using namespace tbc;

namespace {

const double kS = 1.0 / std::sqrt(2.0);

Vec v1(double a) {
  Vec v(1);
  v[0] = a;
  return v;
}
Vec v2(double a, double b) {
  Vec v(2);
  v[0] = a;
  v[1] = b;
  return v;
}
Vec v3(double a, double b, double c) {
  Vec v(3);
  v[0] = a;
  v[1] = b;
  v[2] = c;
  return v;
}

Direction up(int d) { return Direction::vertical(d); }

// Minimal inter-centre distance on a uniform time grid.
double dense_min_distance(const Body& a, const Body& b, double T, int steps = 10000) {
  double best = INFINITY;
  for (int k = 0; k <= steps; ++k) {
    const double u = T * k / steps;
    best = std::min(best, dist(position_at(a, u), position_at(b, u)));
  }
  return best;
}

}  // namespace

TEST(Direction, RejectsNonUnitAndLowVertical) {
  EXPECT_THROW(Direction(v2(1.0, 1.0), 0.5), ContractViolation);
  EXPECT_THROW(Direction(v2(std::sqrt(0.75), 0.5), 0.5), ContractViolation);
  EXPECT_NO_THROW(Direction(v2(kS, kS), 0.5));
}

TEST(Direction, VelocityAndScope) {
  const Direction d(v3(-kS, 0.0, kS), 0.5);
  EXPECT_NEAR(d.velocity()[0], -1.0, 1e-15);
  EXPECT_NEAR(d.velocity()[1], 0.0, 1e-15);
  EXPECT_NEAR(d.scope(1.0), std::sqrt(2.0), 1e-15);
}

TEST(PositionAt, StationaryStaysPut) {
  const Cylinder c(v2(0.3, -0.2), up(2), 0.1, 1.0);
  for (double u : {0.0, 0.4, 1.0}) EXPECT_EQ(c.position_at(u), v2(0.3, -0.2));
}

TEST(PositionAt, MovingCylinder) {
  const Cylinder c(v2(0.0, 0.0), Direction(v3(-kS, 0.0, kS), 0.5), 0.1, 1.0);
  const Vec x = c.position_at(1.0);
  EXPECT_NEAR(x[0], -1.0, 1e-14);
  EXPECT_NEAR(x[1], 0.0, 1e-14);
}

TEST(PositionAt, RejectsOutsideHorizon) {
  const Cylinder c(v2(0.0, 0.0), up(2), 0.1, 1.0);
  EXPECT_THROW(c.position_at(-0.1), ContractViolation);
  EXPECT_THROW(c.position_at(1.1), ContractViolation);
}

TEST(PositionAt, StackIntegratesSegments) {
  const CylinderStack st(v2(0.5, 1.0), {0.0, 0.5, 1.0}, {up(2), Direction(v3(kS, 0.0, kS), 0.5)}, 0.1);
  const Vec x = st.position_at(1.0);
  EXPECT_NEAR(x[0], 1.0, 1e-14);
  EXPECT_NEAR(x[1], 1.0, 1e-14);
}

TEST(PositionAt, StackIsContinuousAtBreakpoints) {
  Engine rng(7);
  const StackingSchedule sched{{0.2, 0.5, 0.9}, 1.0};
  for (int trial = 0; trial < 200; ++trial) {
    const auto dirs = sample_stacked_directions(UniformCap{}, sched, 2, 0.3, rng);
    const CylinderStack st(v2(0.0, 0.0), sched.breakpoints(1.0), dirs, 0.1);
    for (int k = 1; k < st.segments(); ++k) {
      const double t = st.breakpoints()[k];
      const Vec left = st.piece(k - 1).position(t);
      const Vec right = st.piece(k).position(t);
      EXPECT_LT(dist(left, right), 1e-9);
    }
  }
}

TEST(VShadow, Examples) {
  const Direction diag(v2(kS, kS), 0.5);
  EXPECT_NEAR(v_shadow(v2(3.0, 2.0), diag)[0], 1.0, 1e-14);
  EXPECT_NEAR(v_shadow(v2(3.0, 0.0), diag)[0], 3.0, 0.0);
  EXPECT_EQ(v_shadow(v3(0.4, -1.0, 0.7), up(2)), v2(0.4, -1.0));
}

TEST(VShadow, CoverageCriterion) {
  Engine rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const Direction v = sample_direction(UniformCap{}, 2, 0.4, rng);
    const Vec p = v2(uniform01(rng) * 2 - 1, uniform01(rng) * 2 - 1);
    const Cylinder c(p, v, 0.3, 1.0);
    const Vec x = v3(uniform01(rng) * 3 - 1.5, uniform01(rng) * 3 - 1.5, uniform01(rng));
    EXPECT_EQ(contains_point(c, x), dist(v_shadow(x, v), p) <= 0.3);
  }
}

TEST(ContainsPoint, Examples) {
  const Cylinder c(v2(0.0, 0.0), up(2), 0.5, 1.0);
  EXPECT_TRUE(contains_point(c, v3(0.0, 0.0, 0.3)));
  EXPECT_FALSE(contains_point(c, v3(0.6, 0.0, 0.3)));
  EXPECT_TRUE(contains_point(c, v3(0.5, 0.0, 0.3)));
  EXPECT_FALSE(contains_point(c, v3(0.0, 0.0, 1.5)));
}

TEST(Pairwise, StationaryThreshold) {
  const double r = 0.25;
  const Cylinder a(v2(0.0, 0.0), up(2), r, 1.0);
  EXPECT_FALSE(pairwise_intersects(a, Cylinder(v2(3 * r, 0.0), up(2), r, 1.0)));
  EXPECT_TRUE(pairwise_intersects(a, Cylinder(v2(2 * r, 0.0), up(2), r, 1.0)));
}

TEST(Pairwise, MovingMeetsStationary) {
  const Cylinder a(v2(0.0, 0.0), up(2), 0.25, 1.0);
  const Cylinder b(v2(1.0, 0.0), Direction(v3(-kS, 0.0, kS), 0.5), 0.25, 1.0);
  EXPECT_TRUE(pairwise_intersects(a, b));
  EXPECT_NEAR(closest_approach(a, b).distance, 0.0, 1e-14);
}

TEST(Pairwise, FarBasepointsNeverMeet) {
  ModelParams p;
  p.d = 2;
  p.r = 0.3;
  p.h = 0.5;
  Engine rng(5);
  const double R = p.interaction_radius();
  for (int trial = 0; trial < 1000; ++trial) {
    const Cylinder a(v2(0.0, 0.0), sample_direction(p.law, 2, p.h, rng), p.r, p.T);
    const double ang = uniform01(rng) * 6.283185307179586;
    const double rho = R * (1.0 + 1e-9 + uniform01(rng));
    const Cylinder b(v2(rho * std::cos(ang), rho * std::sin(ang)), sample_direction(p.law, 2, p.h, rng), p.r, p.T);
    EXPECT_FALSE(pairwise_intersects(a, b));
  }
}

TEST(Pairwise, SymmetricTranslationInvariantAndMatchesDenseOracle) {
  Engine rng(99);
  const double r = 0.2, T = 1.0;
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Vec pa = v2(uniform01(rng) * 2, uniform01(rng) * 2);
    const Vec pb = v2(uniform01(rng) * 2, uniform01(rng) * 2);
    const Cylinder a(pa, sample_direction(UniformCap{}, 2, 0.3, rng), r, T);
    const Cylinder b(pb, sample_direction(UniformCap{}, 2, 0.3, rng), r, T);
    const bool ab = pairwise_intersects(a, b);
    EXPECT_EQ(ab, pairwise_intersects(b, a));
    const Vec shift = v2(5.0, -3.0);
    EXPECT_EQ(ab, pairwise_intersects(Cylinder(pa + shift, a.direction(), r, T),
                                      Cylinder(pb + shift, b.direction(), r, T)));
    const double dense = dense_min_distance(a, b, T);
    if (std::abs(dense - 2 * r) > 1e-6) {
      EXPECT_EQ(ab, dense <= 2 * r);
      ++checked;
    }
  }
  EXPECT_GT(checked, 350);
}

TEST(PairwiseStacked, DegenerateStackMatchesCylinder) {
  Engine rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Direction va = sample_direction(UniformCap{}, 2, 0.4, rng);
    const Direction vb = sample_direction(UniformCap{}, 2, 0.4, rng);
    const Vec pa = v2(uniform01(rng), uniform01(rng));
    const Vec pb = v2(uniform01(rng) + 0.5, uniform01(rng));
    const bool plain = pairwise_intersects(Cylinder(pa, va, 0.2, 1.0), Cylinder(pb, vb, 0.2, 1.0));
    const bool stacked = pairwise_intersects_stacked(CylinderStack(pa, {0.0, 1.0}, {va}, 0.2),
                                                     CylinderStack(pb, {0.0, 1.0}, {vb}, 0.2));
    EXPECT_EQ(plain, stacked);
  }
}

TEST(PairwiseStacked, StationaryStacks) {
  const CylinderStack a(v2(0.0, 0.0), {0.0, 0.5, 1.0}, {up(2), up(2)}, 0.2);
  const CylinderStack b(v2(0.4, 0.0), {0.0, 0.3, 1.0}, {up(2), up(2)}, 0.2);
  EXPECT_TRUE(pairwise_intersects_stacked(a, b));
}

TEST(PairwiseStacked, MeetsOnlyInMiddleSegment) {
  // b drifts toward a over [1/3, 2/3] and away again afterwards.
  const double third = 1.0 / 3.0;
  const Direction left(v2(-std::sqrt(1 - 0.36), 0.6), 0.5);
  const Direction right(v2(std::sqrt(1 - 0.36), 0.6), 0.5);
  const CylinderStack a(v1(0.0), {0.0, third, 2 * third, 1.0}, {up(1), up(1), up(1)}, 0.05);
  const CylinderStack b(v1(0.5), {0.0, third, 2 * third, 1.0}, {up(1), left, right}, 0.05);
  EXPECT_TRUE(pairwise_intersects_stacked(a, b));
  const Approach ap = closest_approach(a, b);
  EXPECT_GE(ap.u, third - 1e-12);
  EXPECT_LE(ap.u, 2 * third + 1e-12);
  EXPECT_NEAR(ap.distance, dense_min_distance(Body(a), Body(b), 1.0), 1e-3);
}

TEST(Pairwise, ZeroRelativeVelocity) {
  const Direction v(v3(0.3, 0.4, std::sqrt(0.75)), 0.5);
  const Cylinder a(v3(0, 0, 0).head(2), v, 0.1, 1.0);
  const Cylinder b(v2(0.2, 0.0), v, 0.1, 1.0);
  EXPECT_TRUE(pairwise_intersects(a, b));
  EXPECT_FALSE(pairwise_intersects(a, Cylinder(v2(0.2 + 1e-9, 0.0), v, 0.1, 1.0)));
}

namespace {

std::vector<Body> triangle(double r) {
  std::vector<Body> out;
  const double h = std::sqrt(3.0) / 2.0;
  for (const Vec& p : {v2(0.0, 0.0), v2(1.0, 0.0), v2(0.5, h)}) out.push_back(Cylinder(p, up(2), r, 1.0));
  return out;
}

}  // namespace

TEST(Kwise, SingletonMeetingWindow) {
  const std::vector<Body> one{Cylinder(v2(0.0, 0.0), up(2), 0.3, 1.0)};
  EXPECT_TRUE(kwise_intersection_nonempty(one, Box::cube(2, 1.0)));
  const std::vector<Body> outside{Cylinder(v2(3.0, 0.0), up(2), 0.3, 1.0)};
  EXPECT_FALSE(kwise_intersection_nonempty(outside, Box::cube(2, 1.0)));
}

TEST(Kwise, EquilateralTriangle) {
  EXPECT_TRUE(kwise_intersection_nonempty(triangle(0.6), Box::everywhere(2)));
  EXPECT_FALSE(kwise_intersection_nonempty(triangle(0.55), Box::everywhere(2)));
  const KwiseResult res = kwise_intersection(std::span<const Body>(triangle(0.55)), Box::everywhere(2));
  EXPECT_NEAR(res.min_radius, 1.0 / std::sqrt(3.0), 1e-9);
}

TEST(Kwise, ObtuseTriangleUsesDiameter) {
  std::vector<Body> b;
  for (const Vec& p : {v2(0.0, 0.0), v2(2.0, 0.0), v2(1.0, 0.2)}) b.push_back(Cylinder(p, up(2), 1.0, 1.0));
  EXPECT_NEAR(kwise_intersection(std::span<const Body>(b), Box::everywhere(2)).min_radius, 1.0, 1e-9);
}

TEST(Kwise, WindowPushesCentre) {
  // Two stationary cylinders straddling the window edge x = 0.
  std::vector<Body> b{Cylinder(v2(0.3, -0.5), up(2), 0.4, 1.0), Cylinder(v2(0.3, 0.5), up(2), 0.4, 1.0)};
  Box w{v2(-1.0, -1.0), v2(0.0, 1.0)};
  // Best point in the window is (0, 0) at distance sqrt(0.09 + 0.25).
  const Piece pieces[2] = {std::get<Cylinder>(b[0]).piece(), std::get<Cylinder>(b[1]).piece()};
  EXPECT_NEAR(detail::solve_cell(pieces, 0.0, 1.0, -1.0, w, {}).min_radius, std::sqrt(0.34), 1e-9);
  EXPECT_FALSE(kwise_intersection_nonempty(b, w));
  for (auto& body : b) body = Cylinder(basepoint_of(body), up(2), 0.59, 1.0);
  EXPECT_TRUE(kwise_intersection_nonempty(b, w));
}

TEST(Kwise, TimeOptimisation) {
  // Two nodes approaching with closest distance 0.1 at u = 0.5.
  const Direction right(v3(0.6, 0.0, 0.8), 0.5);
  const Direction left(v3(-0.6, 0.0, 0.8), 0.5);
  std::vector<Body> b{Cylinder(v2(-0.375, 0.05), right, 0.051, 1.0),
                      Cylinder(v2(0.375, -0.05), left, 0.051, 1.0)};
  const KwiseResult res = kwise_intersection(std::span<const Body>(b), Box::everywhere(2));
  EXPECT_TRUE(res.nonempty());
  b[0] = Cylinder(v2(-0.375, 0.05), right, 0.049, 1.0);
  b[1] = Cylinder(v2(0.375, -0.05), left, 0.049, 1.0);
  const KwiseResult res2 = kwise_intersection(std::span<const Body>(b), Box::everywhere(2));
  EXPECT_FALSE(res2.nonempty());
  const Piece pieces[2] = {std::get<Cylinder>(b[0]).piece(), std::get<Cylinder>(b[1]).piece()};
  const KwiseResult exact = detail::solve_cell(pieces, 0.0, 1.0, -1.0, Box::everywhere(2), {});
  EXPECT_NEAR(exact.min_radius, 0.05, 1e-9);
  EXPECT_NEAR(exact.u, 0.5, 1e-5);
}

TEST(Kwise, MatchesPairwiseWithoutWindow) {
  Engine rng(21);
  int checked = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const double r = 0.2;
    std::vector<Body> b;
    for (int i = 0; i < 2; ++i)
      b.push_back(Cylinder(v2(uniform01(rng) * 1.5, uniform01(rng) * 1.5),
                           sample_direction(UniformCap{}, 2, 0.3, rng), r, 1.0));
    const double dd = closest_approach(std::get<Cylinder>(b[0]), std::get<Cylinder>(b[1])).distance;
    if (std::abs(dd - 2 * r) < 1e-7) continue;
    ++checked;
    EXPECT_EQ(kwise_intersection_nonempty(b, Box::everywhere(2)),
              pairwise_intersects(std::get<Cylinder>(b[0]), std::get<Cylinder>(b[1])));
  }
  EXPECT_GT(checked, 1900);
}

TEST(Kwise, AntitoneInTheList) {
  Engine rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Body> b;
    for (int i = 0; i < 4; ++i)
      b.push_back(Cylinder(v2(uniform01(rng), uniform01(rng)), sample_direction(UniformCap{}, 2, 0.3, rng), 0.4, 1.0));
    const Box w = Box::cube(2, 1.0);
    bool prev = true;
    for (std::size_t k = 1; k <= b.size(); ++k) {
      const bool now = kwise_intersection_nonempty(std::span<const Body>(b.data(), k), w);
      if (!prev) {
        EXPECT_FALSE(now);
      }
      prev = now;
    }
  }
}

TEST(Kwise, AgreesWithDenseSpaceTimeSearch) {
  // d = 1: brute-force the common intersection on a fine (x, u) grid.
  Engine rng(41);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const double r = 0.3;
    std::vector<Body> b;
    for (int i = 0; i < 3; ++i)
      b.push_back(Cylinder(v1(uniform01(rng) * 1.2), sample_direction(UniformCap{}, 1, 0.3, rng), r, 1.0));
    const KwiseResult res = kwise_intersection(std::span<const Body>(b), Box::cube(1, 1.0));
    // Interval intersection per time step gives the exact slack function.
    double best = -INFINITY;
    for (int k = 0; k <= 20000; ++k) {
      const double u = k / 20000.0;
      double lo = -1.0, hi = 1.0;
      for (const Body& x : b) {
        const double c = position_at(x, u)[0];
        lo = std::max(lo, c - r);
        hi = std::min(hi, c + r);
      }
      best = std::max(best, hi - lo);
    }
    if (std::abs(best) < 1e-3) continue;
    ++checked;
    EXPECT_EQ(res.nonempty(), best >= 0.0) << "trial " << trial;
  }
  EXPECT_GT(checked, 100);
}

TEST(Kwise, StrictModeFlagsTangency) {
  std::vector<Body> b{Cylinder(v2(0.0, 0.0), up(2), 0.25, 1.0), Cylinder(v2(0.5, 0.0), up(2), 0.25, 1.0)};
  KwiseOptions strict;
  strict.strict = true;
  EXPECT_EQ(kwise_intersection(std::span<const Body>(b), Box::everywhere(2), strict).status, Certainty::Indeterminate);
  EXPECT_TRUE(kwise_intersection_nonempty(b, Box::everywhere(2)));
}

TEST(Kwise, StacksSplitOnMergedGrid) {
  const double third = 1.0 / 3.0;
  const Direction left(v2(-std::sqrt(1 - 0.36), 0.6), 0.5);
  const Direction right(v2(std::sqrt(1 - 0.36), 0.6), 0.5);
  auto make = [&](double r) {
    return std::vector<Body>{CylinderStack(v1(0.0), {0.0, third, 2 * third, 1.0}, {up(1), up(1), up(1)}, r),
                             CylinderStack(v1(0.8), {0.0, 0.5, 1.0}, {left, right}, r)};
  };
  // Closest approach 0.8 - (4/3) * 0.5 = 2/15 at u = 0.5.
  EXPECT_NEAR(dense_min_distance(make(0.1)[0], make(0.1)[1], 1.0), 2.0 / 15.0, 1e-9);
  EXPECT_TRUE(kwise_intersection_nonempty(make(1.0 / 15.0 + 1e-6), Box::everywhere(1)));
  EXPECT_FALSE(kwise_intersection_nonempty(make(1.0 / 15.0 - 1e-6), Box::everywhere(1)));
}
