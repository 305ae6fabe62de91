#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <ranges>
#include <span>
#include <utility>
#include <vector>

#include "chseg/error.hpp"
#include "chseg/grid.hpp"

namespace chseg {

/// Two fields on one grid stored back to back: the u-part first, then the
/// v-part. Iterates as a flat vector of length 2N.
class StackedField {
 public:
  StackedField() = default;
  explicit StackedField(const GridSpec& grid) : grid_(grid), data_(2 * grid.size(), 0.0) {}
  StackedField(const ScalarField& u, const ScalarField& v) : grid_(u.grid()), data_(2 * u.size()) {
    u.check_same(v);
    std::copy(u.begin(), u.end(), data_.begin());
    std::copy(v.begin(), v.end(), data_.begin() + static_cast<std::ptrdiff_t>(u.size()));
  }

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return data_.size(); }
  std::size_t half() const { return data_.size() / 2; }

  std::span<double> u_part() { return {data_.data(), half()}; }
  std::span<const double> u_part() const { return {data_.data(), half()}; }
  std::span<double> v_part() { return {data_.data() + half(), half()}; }
  std::span<const double> v_part() const { return {data_.data() + half(), half()}; }

  ScalarField u_field() const { return {grid_, std::vector<double>(u_part().begin(), u_part().end())}; }
  ScalarField v_field() const { return {grid_, std::vector<double>(v_part().begin(), v_part().end())}; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

 private:
  GridSpec grid_;
  std::vector<double> data_;
};

/// Anything BiCGSTAB can iterate on: a copyable contiguous range of doubles.
template <class V>
concept KrylovVector = std::copyable<V> && std::ranges::contiguous_range<V> && std::ranges::sized_range<V> &&
                       std::same_as<std::ranges::range_value_t<V>, double>;

struct SolveStats {
  int iterations = 0;
  double residual_norm = 0.0;      // ||b - A x|| recomputed for the returned x
  double relative_residual = 0.0;  // residual_norm / ||b|| (absolute when b = 0)
  bool converged = false;
  bool breakdown = false;
};

/// Absolute floor of the stopping threshold max(tol ||b||, floor).
inline constexpr double kResidualFloor = 1e-14;
inline constexpr double kBreakdownLimit = 1e-30;

struct IdentityPreconditioner {
  template <KrylovVector V>
  V operator()(const V& x) const {
    return x;
  }
};

namespace detail {

template <KrylovVector V>
double dot(const V& a, const V& b) {
  double s = 0.0;
  auto ia = std::ranges::begin(a);
  for (auto ib = std::ranges::begin(b); ib != std::ranges::end(b); ++ia, ++ib) s += *ia * *ib;
  return s;
}

template <KrylovVector V>
double norm(const V& a) {
  return std::sqrt(dot(a, a));
}

// y += alpha x
template <KrylovVector V>
void axpy(double alpha, const V& x, V& y) {
  auto ix = std::ranges::begin(x);
  for (auto iy = std::ranges::begin(y); iy != std::ranges::end(y); ++ix, ++iy) *iy += alpha * *ix;
}

template <KrylovVector V, class Apply>
V residual(Apply& apply, const V& b, const V& x) {
  V r = apply(x);
  auto ib = std::ranges::begin(b);
  for (auto ir = std::ranges::begin(r); ir != std::ranges::end(r); ++ir, ++ib) *ir = *ib - *ir;
  return r;
}

inline void require_finite(double v, int iteration) {
  if (!std::isfinite(v)) throw NumericalError("BiCGSTAB produced a non-finite value", iteration);
}

}  // namespace detail

/// Unpreconditioned (or right-preconditioned) BiCGSTAB.
///
/// Stops when ||b - A x|| <= max(tol ||b||, 1e-14). The residual is
/// recomputed from scratch before convergence is accepted; if the recurrence
/// drifted, the iteration restarts from the true residual. At max_iters the
/// iterate with the smallest recurrence residual is returned unconverged.
template <KrylovVector V, class Apply, class Precond = IdentityPreconditioner>
std::pair<V, SolveStats> bicgstab(Apply&& apply, const V& rhs, V x, double tol, int max_iters,
                                  Precond&& precond = {}) {
  using detail::axpy;
  using detail::dot;
  using detail::norm;
  if (!(tol > 0.0)) throw InvalidArgument("BiCGSTAB tolerance must be > 0");
  if (max_iters < 1) throw InvalidArgument("BiCGSTAB needs max_iters >= 1");
  if (std::ranges::size(rhs) != std::ranges::size(x)) throw ShapeMismatch("BiCGSTAB rhs and x0 differ in length");

  const double b_norm = norm(rhs);
  const double threshold = std::max(tol * b_norm, kResidualFloor);
  SolveStats stats;

  auto finish = [&](V result, bool converged, bool breakdown) {
    const double res = norm(detail::residual(apply, rhs, result));
    stats.residual_norm = res;
    stats.relative_residual = b_norm > 0.0 ? res / b_norm : res;
    stats.converged = converged;
    stats.breakdown = breakdown;
    return std::pair<V, SolveStats>{std::move(result), stats};
  };

  V r = detail::residual(apply, rhs, x);
  double r_norm = norm(r);
  detail::require_finite(r_norm, 0);
  if (r_norm <= threshold) return finish(std::move(x), true, false);

  V r_hat = r;
  V p = r, v = r;
  V best = x;
  double best_norm = r_norm;
  double rho_prev = 1.0, alpha = 1.0, omega = 1.0;
  bool fresh = true;

  // Returns true when the true residual of x meets the threshold; otherwise
  // restarts the recurrence from it.
  auto accept = [&]() {
    r = detail::residual(apply, rhs, x);
    r_norm = norm(r);
    if (r_norm <= threshold) return true;
    r_hat = r;
    fresh = true;
    return false;
  };

  for (int it = 1; it <= max_iters; ++it) {
    stats.iterations = it;
    const double rho = dot(r_hat, r);
    detail::require_finite(rho, it);
    if (std::abs(rho) < kBreakdownLimit) return finish(std::move(x), false, true);

    if (fresh) {
      p = r;
      fresh = false;
    } else {
      const double beta = (rho / rho_prev) * (alpha / omega);
      // p = r + beta (p - omega v)
      axpy(-omega, v, p);
      auto ir = std::ranges::begin(r);
      for (auto ip = std::ranges::begin(p); ip != std::ranges::end(p); ++ip, ++ir) *ip = *ir + beta * *ip;
    }

    const V p_tilde = precond(p);
    v = apply(p_tilde);
    const double rv = dot(r_hat, v);
    detail::require_finite(rv, it);
    if (std::abs(rv) < kBreakdownLimit) return finish(std::move(x), false, true);
    alpha = rho / rv;
    detail::require_finite(alpha, it);

    V s = r;
    axpy(-alpha, v, s);
    axpy(alpha, p_tilde, x);
    const double s_norm = norm(s);
    detail::require_finite(s_norm, it);
    if (s_norm <= threshold) {
      if (accept()) return finish(std::move(x), true, false);
      continue;
    }

    const V s_tilde = precond(s);
    const V t = apply(s_tilde);
    const double tt = dot(t, t);
    omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
    detail::require_finite(omega, it);
    if (std::abs(omega) < kBreakdownLimit) return finish(std::move(x), false, true);

    axpy(omega, s_tilde, x);
    r = std::move(s);
    axpy(-omega, t, r);
    r_norm = norm(r);
    detail::require_finite(r_norm, it);
    rho_prev = rho;

    if (r_norm < best_norm) {
      best_norm = r_norm;
      best = x;
    }
    if (r_norm <= threshold && accept()) return finish(std::move(x), true, false);
  }
  return finish(std::move(best), false, false);
}

}  // namespace chseg
