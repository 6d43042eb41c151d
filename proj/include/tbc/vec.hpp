#ifndef TBC_VEC_HPP
#define TBC_VEC_HPP

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>

namespace tbc {

/// Largest supported spatial dimension. Ambient space-time vectors carry one
/// extra coordinate, so storage is sized for kMaxDim + 1.
inline constexpr int kMaxDim = 4;

/// Fixed-capacity real vector with a runtime length. Spatial points use
/// length d, space-time points and directions use length d + 1.
class Vec {
 public:
  static constexpr int kCapacity = kMaxDim + 1;

  Vec() = default;
  explicit Vec(int n, double fill = 0.0) : n_(n) {
    if (n < 0 || n > kCapacity) throw std::invalid_argument("Vec: unsupported length");
    data_.fill(0.0);
    for (int i = 0; i < n; ++i) data_[i] = fill;
  }
  Vec(std::initializer_list<double> xs) : Vec(static_cast<int>(xs.size())) {
    int i = 0;
    for (double x : xs) data_[i++] = x;
  }
  explicit Vec(std::span<const double> xs) : Vec(static_cast<int>(xs.size())) {
    for (int i = 0; i < n_; ++i) data_[i] = xs[i];
  }

  int size() const { return n_; }
  double& operator[](int i) {
    assert(i >= 0 && i < n_);
    return data_[i];
  }
  double operator[](int i) const {
    assert(i >= 0 && i < n_);
    return data_[i];
  }
  double back() const { return data_[n_ - 1]; }

  const double* begin() const { return data_.data(); }
  const double* end() const { return data_.data() + n_; }
  double* begin() { return data_.data(); }
  double* end() { return data_.data() + n_; }
  std::span<const double> span() const { return {data_.data(), static_cast<std::size_t>(n_)}; }

  /// First m coordinates.
  Vec head(int m) const {
    Vec out(m);
    for (int i = 0; i < m; ++i) out.data_[i] = data_[i];
    return out;
  }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n_; ++i) data_[i] += o.data_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n_; ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Vec& operator*=(double a) {
    for (int i = 0; i < n_; ++i) data_[i] *= a;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(Vec a, double s) { return a *= s; }
  friend Vec operator*(double s, Vec a) { return a *= s; }
  friend bool operator==(const Vec& a, const Vec& b) {
    if (a.n_ != b.n_) return false;
    for (int i = 0; i < a.n_; ++i)
      if (a.data_[i] != b.data_[i]) return false;
    return true;
  }

 private:
  std::array<double, kCapacity> data_{};
  int n_ = 0;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }
inline double dist2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}
inline double dist(const Vec& a, const Vec& b) { return std::sqrt(dist2(a, b)); }

/// Appends a time coordinate to a spatial point.
inline Vec lift(const Vec& x, double u) {
  Vec out(x.size() + 1);
  for (int i = 0; i < x.size(); ++i) out[i] = x[i];
  out[x.size()] = u;
  return out;
}

}  // namespace tbc

#endif  // TBC_VEC_HPP
