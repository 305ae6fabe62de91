#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "chseg/error.hpp"

namespace chseg {

/// Uniform grid of nx x ny points on [0, lx] x [0, ly].
///
/// Spacing follows dx = lx / (nx - 1). The Fourier operators treat lx as the
/// period, so dx only labels coordinates.
struct GridSpec {
  std::size_t nx = 0;
  std::size_t ny = 0;
  double lx = 1.0;
  double ly = 1.0;

  GridSpec() = default;
  GridSpec(std::size_t nx_, std::size_t ny_, double lx_, double ly_) : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
    validate();
  }

  /// Grid whose points sit one length unit apart (dx = dy = spacing).
  static GridSpec with_spacing(std::size_t nx, std::size_t ny, double spacing = 1.0) {
    return GridSpec(nx, ny, spacing * static_cast<double>(nx - 1), spacing * static_cast<double>(ny - 1));
  }

  void validate() const {
    if (nx < 4 || ny < 4) {
      throw InvalidArgument("grid needs at least 4 points per axis, got " + std::to_string(nx) + "x" +
                            std::to_string(ny));
    }
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
      throw InvalidArgument("grid lengths must be positive and finite");
    }
  }

  double dx() const { return lx / static_cast<double>(nx - 1); }
  double dy() const { return ly / static_cast<double>(ny - 1); }
  double x(std::size_t i) const { return static_cast<double>(i) * dx(); }
  double y(std::size_t j) const { return static_cast<double>(j) * dy(); }
  std::size_t size() const { return nx * ny; }

  bool same_shape(const GridSpec& o) const { return nx == o.nx && ny == o.ny; }
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

namespace detail {

template <class T>
class Grid2d {
 public:
  Grid2d() = default;
  explicit Grid2d(const GridSpec& grid, T fill = T{}) : grid_(grid), values_(grid.size(), fill) {}
  Grid2d(const GridSpec& grid, std::vector<T> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw ShapeMismatch("value count " + std::to_string(values_.size()) + " does not match grid " +
                          std::to_string(grid_.nx) + "x" + std::to_string(grid_.ny));
    }
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t nx() const { return grid_.nx; }
  std::size_t ny() const { return grid_.ny; }
  std::size_t size() const { return values_.size(); }

  // Row index i runs along x, column index j along y.
  T& operator()(std::size_t i, std::size_t j) { return values_[i * grid_.ny + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return values_[i * grid_.ny + j]; }
  T& operator[](std::size_t k) { return values_[k]; }
  const T& operator[](std::size_t k) const { return values_[k]; }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](const T& v) {
      if constexpr (std::is_floating_point_v<T>) {
        return std::isfinite(v);
      } else {
        return std::isfinite(v.real()) && std::isfinite(v.imag());
      }
    });
  }

 protected:
  GridSpec grid_;
  std::vector<T> values_;
};

}  // namespace detail

/// Real-valued grid function: images, phase fields, coefficient fields.
class ScalarField : public detail::Grid2d<double> {
 public:
  using Grid2d::Grid2d;

  template <class F>
  static ScalarField from_function(const GridSpec& grid, F&& fn) {
    ScalarField out(grid);
    for (std::size_t i = 0; i < grid.nx; ++i) {
      for (std::size_t j = 0; j < grid.ny; ++j) out(i, j) = fn(grid.x(i), grid.y(j));
    }
    return out;
  }

  double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }
  double mean() const { return sum() / static_cast<double>(values_.size()); }
  double min() const { return *std::min_element(values_.begin(), values_.end()); }
  double max() const { return *std::max_element(values_.begin(), values_.end()); }
  double l2_norm() const {
    double s = 0.0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

  ScalarField& clamp(double lo, double hi) {
    for (double& v : values_) v = std::clamp(v, lo, hi);
    return *this;
  }

  ScalarField& operator+=(const ScalarField& o) {
    check_same(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    check_same(o);
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  void check_same(const ScalarField& o) const {
    if (!grid_.same_shape(o.grid())) {
      throw ShapeMismatch("field shapes differ: " + std::to_string(nx()) + "x" + std::to_string(ny()) + " vs " +
                          std::to_string(o.nx()) + "x" + std::to_string(o.ny()));
    }
  }
};

/// Complex DFT coefficients in standard (unshifted) ordering.
class SpectralField : public detail::Grid2d<std::complex<double>> {
 public:
  using Grid2d::Grid2d;
};

/// Largest absolute pointwise difference between two fields of the same shape.
inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  a.check_same(b);
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace chseg
