#pragma once

#include <cmath>
#include <cstddef>

#include "chseg/grid.hpp"
#include "chseg/metrics.hpp"

namespace chseg {

/// Binary disk image: 1 inside radius (in pixels) around (ci, cj), else 0.
inline ScalarField make_disk(const GridSpec& grid, double radius, double ci, double cj) {
  ScalarField f(grid);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    for (std::size_t j = 0; j < grid.ny; ++j) {
      const double di = static_cast<double>(i) - ci;
      const double dj = static_cast<double>(j) - cj;
      f(i, j) = di * di + dj * dj <= radius * radius ? 1.0 : 0.0;
    }
  }
  return f;
}

/// Centered disk with radius lx/4, i.e. (nx - 1)/4 pixels.
inline ScalarField make_centered_disk(const GridSpec& grid) {
  const double c = 0.5 * static_cast<double>(grid.nx - 1);
  const double cj = 0.5 * static_cast<double>(grid.ny - 1);
  return make_disk(grid, 0.25 * static_cast<double>(grid.nx - 1), c, cj);
}

/// Vertical bands of the given width in pixels, alternating 1 and 0.
inline ScalarField make_stripes(const GridSpec& grid, std::size_t band) {
  ScalarField f(grid);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    for (std::size_t j = 0; j < grid.ny; ++j) f(i, j) = (j / band) % 2 == 0 ? 1.0 : 0.0;
  }
  return f;
}

inline BinaryMask to_mask(const ScalarField& f) {
  BinaryMask m(f.nx(), f.ny());
  for (std::size_t i = 0; i < f.nx(); ++i) {
    for (std::size_t j = 0; j < f.ny(); ++j) m.set(i, j, f(i, j) >= 0.5);
  }
  return m;
}

}  // namespace chseg
