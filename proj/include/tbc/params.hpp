#ifndef TBC_PARAMS_HPP
#define TBC_PARAMS_HPP

#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tbc/errors.hpp"
#include "tbc/vec.hpp"

namespace tbc {

/// A unit direction v in the cap {v in S^d : v_{d+1} > h}. The last
/// coordinate is the vertical (time) component; the spatial velocity of the
/// node is mu = (v_1..v_d) / v_{d+1}.
class Direction {
 public:
  Direction() = default;
  Direction(const Vec& v, double h) : v_(v) {
    require(v.size() >= 2 && v.size() <= kMaxDim + 1, "Direction: dimension out of range");
    require(std::abs(norm(v) - 1.0) <= 1e-12, "Direction: vector is not unit length");
    require(v.back() > h, "Direction: vertical component must exceed h");
    const int d = v.size() - 1;
    mu_ = Vec(d);
    for (int i = 0; i < d; ++i) mu_[i] = v[i] / v.back();
  }

  /// Straight up: a stationary node.
  static Direction vertical(int d) {
    Vec v(d + 1);
    v[d] = 1.0;
    return Direction(v, 0.0);
  }

  const Vec& v() const { return v_; }
  const Vec& velocity() const { return mu_; }
  int dim() const { return mu_.size(); }
  double vertical_component() const { return v_.back(); }
  /// R_v = T / v_{d+1}.
  double scope(double horizon) const { return horizon / v_.back(); }

 private:
  Vec v_;
  Vec mu_;
};

struct UniformCap {};

struct DiscreteLaw {
  std::vector<Vec> directions;
  std::vector<double> weights;
};

struct DegenerateLaw {
  Vec direction;
};

/// Direction distribution Q on the cap.
using DirectionLaw = std::variant<UniformCap, DiscreteLaw, DegenerateLaw>;

inline std::string law_name(const DirectionLaw& law) {
  switch (law.index()) {
    case 0: return "uniform_cap";
    case 1: return "discrete";
    default: return "degenerate";
  }
}

/// Direction resampling times t_1 < ... < t_K in (0, T) and the resampling
/// probability q.
struct StackingSchedule {
  std::vector<double> times;
  double q = 0.0;

  int segments() const { return static_cast<int>(times.size()) + 1; }

  /// Full breakpoint grid 0 = t_0 < t_1 < ... < t_{K+1} = T.
  std::vector<double> breakpoints(double horizon) const {
    std::vector<double> out;
    out.reserve(times.size() + 2);
    out.push_back(0.0);
    out.insert(out.end(), times.begin(), times.end());
    out.push_back(horizon);
    return out;
  }
};

struct ModelParams {
  int d = 2;
  double gamma = 1.0;
  double r = 0.3;
  double T = 1.0;
  double h = 0.5;
  double s = 8.0;
  DirectionLaw law = UniformCap{};
  std::optional<StackingSchedule> stacking;

  bool stacked() const { return stacking.has_value(); }
  /// Maximum scope R_h = T / h.
  double max_scope() const { return T / h; }
  /// Interaction radius R = 2 (R_h + r): cylinders with basepoints further
  /// apart never intersect.
  double interaction_radius() const { return 2.0 * (max_scope() + r); }
  /// Half-width of the sampling box; every cylinder that can meet the window
  /// has its basepoint inside it.
  double dilated_halfwidth() const { return 0.5 * s + max_scope() + r; }
  double window_spatial_volume() const { return std::pow(s, d); }
  double window_volume() const { return window_spatial_volume() * T; }

  ModelParams with_window(double side) const {
    ModelParams p = *this;
    p.s = side;
    return p;
  }

  void validate() const {
    require(d >= 1 && d <= kMaxDim, "ModelParams: d must be in [1, " + std::to_string(kMaxDim) + "]");
    require(std::isfinite(gamma) && gamma >= 0.0, "ModelParams: gamma must be >= 0");
    require(std::isfinite(r) && r >= 0.0, "ModelParams: r must be >= 0");
    require(std::isfinite(T) && T > 0.0, "ModelParams: T must be > 0");
    require(h > 0.0 && h < 1.0, "ModelParams: h must lie in (0, 1)");
    require(std::isfinite(s) && s > 0.0, "ModelParams: s must be > 0");
    if (const auto* dl = std::get_if<DiscreteLaw>(&law)) {
      require(!dl->directions.empty(), "DiscreteLaw: no directions");
      require(dl->directions.size() == dl->weights.size(), "DiscreteLaw: directions/weights size mismatch");
      double total = 0.0;
      for (std::size_t i = 0; i < dl->directions.size(); ++i) {
        require(dl->directions[i].size() == d + 1, "DiscreteLaw: direction has wrong dimension");
        require(dl->weights[i] >= 0.0, "DiscreteLaw: negative weight");
        Direction(dl->directions[i], h);
        total += dl->weights[i];
      }
      require(std::abs(total - 1.0) <= 1e-9, "DiscreteLaw: weights must sum to 1");
    } else if (const auto* g = std::get_if<DegenerateLaw>(&law)) {
      require(g->direction.size() == d + 1, "DegenerateLaw: direction has wrong dimension");
      Direction(g->direction, h);
    }
    if (stacking) {
      require(stacking->q >= 0.0 && stacking->q <= 1.0, "StackingSchedule: q must lie in [0, 1]");
      double prev = 0.0;
      for (double t : stacking->times) {
        require(t > prev && t < T, "StackingSchedule: times must be strictly increasing in (0, T)");
        prev = t;
      }
    }
  }
};

}  // namespace tbc

#endif  // TBC_PARAMS_HPP
