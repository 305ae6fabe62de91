#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "chseg/error.hpp"

namespace chseg {

/// Boolean image, row-major with row index i and column index j.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(std::size_t nx, std::size_t ny, bool fill = false) : nx_(nx), ny_(ny), bits_(nx * ny, fill ? 1 : 0) {}

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return bits_.size(); }

  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * ny_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool on = true) { bits_[i * ny_ + j] = on ? 1 : 0; }
  bool operator[](std::size_t k) const { return bits_[k] != 0; }

  std::size_t count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1)); }
  bool empty() const { return count() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct MetricsReport {
  double dice = 0.0;
  double jaccard = 0.0;
  double hd95 = 0.0;
};

namespace detail {

inline void check_dims(const BinaryMask& a, const BinaryMask& b) {
  if (a.nx() != b.nx() || a.ny() != b.ny()) {
    throw ShapeMismatch("mask dimensions differ: " + std::to_string(a.nx()) + "x" + std::to_string(a.ny()) + " vs " +
                        std::to_string(b.nx()) + "x" + std::to_string(b.ny()));
  }
}

struct Overlap {
  std::size_t a = 0, b = 0, both = 0;
};

inline Overlap overlap(const BinaryMask& a, const BinaryMask& b) {
  check_dims(a, b);
  Overlap o;
  for (std::size_t k = 0; k < a.size(); ++k) {
    o.a += a[k];
    o.b += b[k];
    o.both += a[k] && b[k];
  }
  return o;
}

}  // namespace detail

/// 2|A n B| / (|A| + |B|); 1 when both masks are empty.
inline double dice(const BinaryMask& a, const BinaryMask& b) {
  const auto o = detail::overlap(a, b);
  if (o.a + o.b == 0) return 1.0;
  return 2.0 * static_cast<double>(o.both) / static_cast<double>(o.a + o.b);
}

/// |A n B| / |A u B|; 1 when both masks are empty.
inline double jaccard(const BinaryMask& a, const BinaryMask& b) {
  const auto o = detail::overlap(a, b);
  const std::size_t uni = o.a + o.b - o.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(uni);
}

using Pixel = std::pair<std::size_t, std::size_t>;

/// Foreground pixels with at least one 4-neighbor in the background; pixels
/// outside the image count as background.
inline std::vector<Pixel> boundary_pixels(const BinaryMask& m) {
  std::vector<Pixel> out;
  const std::size_t nx = m.nx(), ny = m.ny();
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      if (!m(i, j)) continue;
      const bool edge = i == 0 || j == 0 || i + 1 == nx || j + 1 == ny || !m(i - 1, j) || !m(i + 1, j) ||
                        !m(i, j - 1) || !m(i, j + 1);
      if (edge) out.emplace_back(i, j);
    }
  }
  return out;
}

/// Exact squared Euclidean distance to the nearest seed pixel, computed with
/// the separable lower-envelope transform of Felzenszwalb and Huttenlocher.
inline std::vector<double> squared_distance_transform(std::size_t nx, std::size_t ny, const std::vector<Pixel>& seeds) {
  constexpr double inf = 1e20;
  std::vector<double> grid(nx * ny, inf);
  for (const auto& [i, j] : seeds) grid[i * ny + j] = 0.0;

  const std::size_t n_max = std::max(nx, ny);
  std::vector<double> f(n_max), d(n_max), z(n_max + 1);
  std::vector<std::size_t> v(n_max);

  auto transform_1d = [&](std::size_t n) {
    std::size_t k = 0;
    v[0] = 0;
    z[0] = -inf;
    z[1] = inf;
    for (std::size_t q = 1; q < n; ++q) {
      const double qd = static_cast<double>(q);
      auto intersect = [&] {
        const double vk = static_cast<double>(v[k]);
        return ((f[q] + qd * qd) - (f[v[k]] + vk * vk)) / (2.0 * qd - 2.0 * vk);
      };
      double s = intersect();
      // z[0] is -inf, so this stops at k = 0 at the latest.
      while (s <= z[k]) {
        --k;
        s = intersect();
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = inf;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
      const double qd = static_cast<double>(q);
      while (z[k + 1] < qd) ++k;
      const double diff = qd - static_cast<double>(v[k]);
      d[q] = diff * diff + f[v[k]];
    }
  };

  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) f[i] = grid[i * ny + j];
    transform_1d(nx);
    for (std::size_t i = 0; i < nx; ++i) grid[i * ny + j] = d[i];
  }
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) f[j] = grid[i * ny + j];
    transform_1d(ny);
    for (std::size_t j = 0; j < ny; ++j) grid[i * ny + j] = d[j];
  }
  return grid;
}

enum class DistanceMethod { Auto, BruteForce, Transform };

/// Distance from each pixel in `from` to the nearest pixel in `to`.
inline std::vector<double> directed_distances(const std::vector<Pixel>& from, const std::vector<Pixel>& to,
                                              std::size_t nx, std::size_t ny,
                                              DistanceMethod method = DistanceMethod::Auto) {
  if (method == DistanceMethod::Auto) {
    method = from.size() * to.size() <= (std::size_t{1} << 20) ? DistanceMethod::BruteForce : DistanceMethod::Transform;
  }
  std::vector<double> out;
  out.reserve(from.size());
  if (method == DistanceMethod::BruteForce) {
    for (const auto& [ai, aj] : from) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [bi, bj] : to) {
        const double di = static_cast<double>(ai) - static_cast<double>(bi);
        const double dj = static_cast<double>(aj) - static_cast<double>(bj);
        best = std::min(best, di * di + dj * dj);
      }
      out.push_back(std::sqrt(best));
    }
  } else {
    const auto dt = squared_distance_transform(nx, ny, to);
    for (const auto& [i, j] : from) out.push_back(std::sqrt(dt[i * ny + j]));
  }
  return out;
}

/// Percentile with linear interpolation between order statistics
/// (position q (n - 1) in the sorted sample).
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

/// Pooled distances: A's boundary to B's boundary followed by B's to A's.
inline std::vector<double> boundary_distances(const BinaryMask& a, const BinaryMask& b,
                                              DistanceMethod method = DistanceMethod::Auto) {
  detail::check_dims(a, b);
  const auto ba = boundary_pixels(a);
  const auto bb = boundary_pixels(b);
  if (ba.empty()) throw UndefinedMetric("boundary distance undefined: first mask is empty");
  if (bb.empty()) throw UndefinedMetric("boundary distance undefined: second mask is empty");
  auto ab = directed_distances(ba, bb, a.nx(), a.ny(), method);
  const auto ba_d = directed_distances(bb, ba, a.nx(), a.ny(), method);
  ab.insert(ab.end(), ba_d.begin(), ba_d.end());
  return ab;
}

/// 95th percentile of the pooled symmetric boundary distances, in pixels.
inline double hd95(const BinaryMask& a, const BinaryMask& b, DistanceMethod method = DistanceMethod::Auto) {
  return percentile(boundary_distances(a, b, method), 0.95);
}

/// Full Hausdorff distance between the two boundaries.
inline double hausdorff(const BinaryMask& a, const BinaryMask& b, DistanceMethod method = DistanceMethod::Auto) {
  const auto d = boundary_distances(a, b, method);
  return *std::max_element(d.begin(), d.end());
}

/// Dice, Jaccard and HD95 for one prediction. HD95 is NaN when either mask
/// is empty.
inline MetricsReport evaluate_masks(const BinaryMask& pred, const BinaryMask& gt) {
  MetricsReport r{dice(pred, gt), jaccard(pred, gt), std::numeric_limits<double>::quiet_NaN()};
  if (!pred.empty() && !gt.empty()) r.hd95 = hd95(pred, gt);
  return r;
}

struct MetricsRow {
  std::string id;
  MetricsReport metrics;
};

struct MeanStd {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
};

/// Mean and sample standard deviation over the finite entries.
inline MeanStd mean_std(const std::vector<double>& xs) {
  std::vector<double> v;
  for (double x : xs) {
    if (std::isfinite(x)) v.push_back(x);
  }
  MeanStd out;
  if (v.empty()) return out;
  double s = 0.0;
  for (double x : v) s += x;
  out.mean = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return out;
}

/// id,dice,jaccard,hd95 rows followed by a "mean±std" footer.
inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
  char buf[256];
  os << "id,dice,jaccard,hd95\n";
  std::vector<double> d, j, h;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f", r.metrics.dice, r.metrics.jaccard, r.metrics.hd95);
    os << r.id << ',' << buf << '\n';
    d.push_back(r.metrics.dice);
    j.push_back(r.metrics.jaccard);
    h.push_back(r.metrics.hd95);
  }
  auto fmt = [&](const std::vector<double>& xs) {
    const MeanStd ms = mean_std(xs);
    std::snprintf(buf, sizeof buf, "%.3f±%.3f", ms.mean, ms.stddev);
    return std::string(buf);
  };
  os << "mean±std," << fmt(d) << ',' << fmt(j) << ',' << fmt(h) << '\n';
}

}  // namespace chseg
