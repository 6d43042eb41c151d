#ifndef TBC_SPATIAL_GRID_HPP
#define TBC_SPATIAL_GRID_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "tbc/geometry.hpp"

namespace tbc {

/// Uniform bucket grid over a spatial region. Items are registered by their
/// bounding boxes; queries return every item whose box touches the cell.
class SpatialGrid {
 public:
  SpatialGrid(const Box& region, double cell_size, std::size_t max_cells = 1u << 20)
      : region_(region), dim_(region.dim()) {
    double cell = std::max(cell_size, 1e-9);
    while (true) {
      std::size_t total = 1;
      for (int i = 0; i < dim_; ++i) {
        n_[i] = std::max(1, static_cast<int>(std::ceil((region.hi[i] - region.lo[i]) / cell)));
        total *= static_cast<std::size_t>(n_[i]);
      }
      if (total <= max_cells) {
        cells_.assign(total, {});
        break;
      }
      cell *= 1.5;
    }
    for (int i = 0; i < dim_; ++i) inv_[i] = n_[i] / (region.hi[i] - region.lo[i]);
  }

  void insert(int id, const Box& b) {
    std::array<int, Vec::kCapacity> lo{}, hi{};
    if (!range(b, lo, hi)) return;
    for_cells(lo, hi, [&](std::size_t c) { cells_[c].push_back(id); });
  }

  /// Items registered in the cell containing x (x must lie in the region).
  const std::vector<int>& at(const Vec& x) const {
    std::size_t idx = 0;
    for (int i = dim_ - 1; i >= 0; --i) {
      int k = static_cast<int>((x[i] - region_.lo[i]) * inv_[i]);
      k = std::clamp(k, 0, n_[i] - 1);
      idx = idx * n_[i] + k;
    }
    return cells_[idx];
  }

  /// Calls f(id) for every item in any cell touched by b; ids may repeat.
  template <typename F>
  void for_each_near(const Box& b, F&& f) const {
    std::array<int, Vec::kCapacity> lo{}, hi{};
    if (!range(b, lo, hi)) return;
    for_cells(lo, hi, [&](std::size_t c) {
      for (int id : cells_[c]) f(id);
    });
  }

 private:
  bool range(const Box& b, std::array<int, Vec::kCapacity>& lo, std::array<int, Vec::kCapacity>& hi) const {
    for (int i = 0; i < dim_; ++i) {
      if (b.hi[i] < region_.lo[i] || b.lo[i] > region_.hi[i]) return false;
      lo[i] = std::clamp(static_cast<int>(std::floor((b.lo[i] - region_.lo[i]) * inv_[i])), 0, n_[i] - 1);
      hi[i] = std::clamp(static_cast<int>(std::floor((b.hi[i] - region_.lo[i]) * inv_[i])), 0, n_[i] - 1);
    }
    return true;
  }

  template <typename F>
  void for_cells(const std::array<int, Vec::kCapacity>& lo, const std::array<int, Vec::kCapacity>& hi,
                 F&& f) const {
    std::array<int, Vec::kCapacity> k = lo;
    while (true) {
      std::size_t idx = 0;
      for (int i = dim_ - 1; i >= 0; --i) idx = idx * n_[i] + k[i];
      f(idx);
      int i = 0;
      while (i < dim_ && k[i] == hi[i]) {
        k[i] = lo[i];
        ++i;
      }
      if (i == dim_) break;
      ++k[i];
    }
  }

  Box region_;
  int dim_;
  std::array<int, Vec::kCapacity> n_{};
  std::array<double, Vec::kCapacity> inv_{};
  std::vector<std::vector<int>> cells_;
};

}  // namespace tbc

#endif  // TBC_SPATIAL_GRID_HPP
