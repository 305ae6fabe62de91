#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "chseg/error.hpp"
#include "chseg/field_ops.hpp"
#include "chseg/grid.hpp"
#include "chseg/krylov.hpp"

namespace chseg {

/// Constants of the tailored-finite-point stage.
struct TfpmParams {
  double epsilon = 1.0;
  double lambda = 1.0;
  double tau = 0.02;
  double h = 1.0;
  double tol = 1e-5;
  double delta = 1e-8;  // region-mean regularizer
  int n_steps = 1;      // time steps per block
  int n_blocks = 5;
  std::vector<int> bicgstab_max_iters{5, 10, 15, 20, 25};

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw InvalidArgument(std::string("invalid TFPM parameter: ") + what);
    };
    require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be > 0");
    require(lambda > 0.0 && std::isfinite(lambda), "lambda must be > 0");
    require(tau > 0.0 && std::isfinite(tau), "tau must be > 0");
    require(h > 0.0 && std::isfinite(h), "h must be > 0");
    require(tol > 0.0, "tol must be > 0");
    require(delta > 0.0, "delta must be > 0");
    require(n_steps >= 1, "n_steps must be >= 1");
    require(n_blocks >= 1, "n_blocks must be >= 1");
    require(bicgstab_max_iters.size() == static_cast<std::size_t>(n_blocks),
            "one BiCGSTAB cap per block is required");
    for (int cap : bicgstab_max_iters) require(cap >= 1, "BiCGSTAB caps must be >= 1");
  }
};

/// Five-point neighbor sum with reflective (zero-flux) boundaries: the
/// neighbor outside the grid is the boundary pixel itself.
inline double neighbor_sum(std::span<const double> w, std::size_t nx, std::size_t ny, std::size_t i, std::size_t j) {
  const std::size_t im = i == 0 ? 0 : i - 1;
  const std::size_t ip = i + 1 == nx ? i : i + 1;
  const std::size_t jm = j == 0 ? 0 : j - 1;
  const std::size_t jp = j + 1 == ny ? j : j + 1;
  return w[im * ny + j] + w[ip * ny + j] + w[i * ny + jm] + w[i * ny + jp];
}

/// Unit-spacing five-point Laplacian with reflective boundaries.
inline ScalarField neumann_laplacian(const ScalarField& u) {
  ScalarField out(u.grid());
  const auto w = u.values();
  for (std::size_t i = 0; i < u.nx(); ++i) {
    for (std::size_t j = 0; j < u.ny(); ++j) out(i, j) = neighbor_sum(w, u.nx(), u.ny(), i, j) - 4.0 * u(i, j);
  }
  return out;
}

inline double xi_value(double u, double epsilon) { return 2.0 * std::sqrt(2.0 * u * u + 1.0) / epsilon; }

/// xi = 2 sqrt(2 u^2 + 1) / epsilon, the local exponential rate.
inline ScalarField xi_field(const ScalarField& u, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  ScalarField out(u.grid());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = xi_value(u[k], epsilon);
  return out;
}

/// epsilon xi / (h (e^{xi h/2} - e^{-xi h/2})), evaluated as
/// epsilon xi e^{-a} / (h (1 - e^{-2a})) with a = xi h / 2 so large xi h
/// cannot overflow.
inline double stencil_coefficient(double xi, double epsilon, double h) {
  const double a = 0.5 * xi * h;
  if (a == 0.0) return epsilon / (h * h);
  return epsilon * xi * std::exp(-a) / (h * -std::expm1(-2.0 * a));
}

inline ScalarField stencil_coefficient(const ScalarField& xi, double epsilon, double h) {
  ScalarField out(xi.grid());
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (!(xi[k] >= 0.0)) throw InvalidArgument("xi must be nonnegative");
    out[k] = stencil_coefficient(xi[k], epsilon, h);
  }
  return out;
}

/// Per-pixel coefficients and right-hand sides of the coupled (u, v) system
///
///   diag_u u - coef (sum_nbr u - 4u) + v = (12/eps) u_n
///   u / tau + lambda h1 u + (sum_nbr v - 4v) = u_n / tau + lambda h2
struct TfpmSystem {
  GridSpec grid;
  ScalarField coef;
  ScalarField diag_u;
  ScalarField h1;
  ScalarField h2;
  ScalarField rhs_u;
  ScalarField rhs_v;
  double tau = 0.0;
  double lambda = 0.0;

  StackedField rhs() const { return {rhs_u, rhs_v}; }
};

inline TfpmSystem assemble(const ScalarField& u_n, const ScalarField& f, const RegionStats& stats,
                           const TfpmParams& p) {
  u_n.check_same(f);
  if (!u_n.all_finite() || !f.all_finite()) throw NumericalError("TFPM assembly received a non-finite field");
  const double eps = p.epsilon;
  TfpmSystem sys{u_n.grid(),
                 stencil_coefficient(xi_field(u_n, eps), eps, p.h),
                 ScalarField(u_n.grid()),
                 ScalarField(u_n.grid()),
                 ScalarField(u_n.grid()),
                 ScalarField(u_n.grid()),
                 ScalarField(u_n.grid()),
                 p.tau,
                 p.lambda};
  for (std::size_t k = 0; k < u_n.size(); ++k) {
    const double u = u_n[k];
    const double in = f[k] - stats.c1;
    const double out = f[k] - stats.c2;
    sys.diag_u[k] = 4.0 / eps * (2.0 * u * u + 1.0);
    sys.h1[k] = in * in + out * out;
    sys.h2[k] = out * out;
    sys.rhs_u[k] = 12.0 / eps * u;
    sys.rhs_v[k] = u / p.tau + p.lambda * sys.h2[k];
  }
  return sys;
}

/// Matrix-free product of the 2N x 2N block system with w = (u, v).
inline StackedField apply_operator(const TfpmSystem& sys, const StackedField& w) {
  if (!w.grid().same_shape(sys.grid)) throw ShapeMismatch("stacked field does not match the TFPM system grid");
  const std::size_t nx = sys.grid.nx, ny = sys.grid.ny;
  StackedField out(sys.grid);
  const auto u = w.u_part();
  const auto v = w.v_part();
  auto ou = out.u_part();
  auto ov = out.v_part();
  const double inv_tau = 1.0 / sys.tau;
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t k = i * ny + j;
      const double lap_u = neighbor_sum(u, nx, ny, i, j) - 4.0 * u[k];
      const double lap_v = neighbor_sum(v, nx, ny, i, j) - 4.0 * v[k];
      ou[k] = sys.diag_u[k] * u[k] - sys.coef[k] * lap_u + v[k];
      ov[k] = inv_tau * u[k] + sys.lambda * sys.h1[k] * u[k] + lap_v;
    }
  }
  return out;
}

/// Warm start for v: eps Lap(u_n) - (2/eps) W'(u_n).
inline ScalarField initial_v(const ScalarField& u_n, double epsilon) {
  ScalarField v = neumann_laplacian(u_n);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = epsilon * v[k] - 2.0 / epsilon * double_well_prime(u_n[k]);
  return v;
}

struct TfpmStepResult {
  ScalarField u;
  SolveStats solve;
  RegionStats stats;
};

/// One implicit time step: refresh c1/c2, assemble, solve with BiCGSTAB
/// capped at max_iters, clamp the u-part to [0, 1]. Hitting the cap is not
/// an error; it shows up as solve.converged == false.
inline TfpmStepResult tfpm_step(const ScalarField& u_n, const ScalarField& f, const TfpmParams& p, int max_iters) {
  const RegionStats stats = region_means(u_n, f, p.delta);
  const TfpmSystem sys = assemble(u_n, f, stats, p);
  StackedField x0(u_n, initial_v(u_n, p.epsilon));
  auto [x, solve] =
      bicgstab([&sys](const StackedField& w) { return apply_operator(sys, w); }, sys.rhs(), std::move(x0), p.tol,
               max_iters);
  ScalarField u = x.u_field();
  if (!u.all_finite()) throw NumericalError("TFPM step produced a non-finite field");
  u.clamp(0.0, 1.0);
  return {std::move(u), solve, stats};
}

struct TfpmStepRecord {
  int block = 0;
  int step = 0;
  int max_iters = 0;
  SolveStats solve;
  RegionStats stats;
};

inline void write_tfpm_csv(std::ostream& os, const std::vector<TfpmStepRecord>& records) {
  os << "block,step,bicgstab_iters,final_residual,converged_flag,c1,c2\n";
  os.precision(17);
  for (const auto& r : records) {
    os << r.block << ',' << r.step << ',' << r.solve.iterations << ',' << r.solve.relative_residual << ','
       << (r.solve.converged ? 1 : 0) << ',' << r.stats.c1 << ',' << r.stats.c2 << '\n';
  }
}

using TfpmObserver = std::function<void(const TfpmStepRecord&, const ScalarField&)>;

/// Runs n_blocks blocks of n_steps time steps each; block b uses the BiCGSTAB
/// cap bicgstab_max_iters[b].
inline std::pair<ScalarField, std::vector<TfpmStepRecord>> tfpm_solve(const ScalarField& u0, const ScalarField& f,
                                                                      const TfpmParams& p,
                                                                      const TfpmObserver& observe = {}) {
  p.validate();
  u0.check_same(f);
  ScalarField u = u0;
  std::vector<TfpmStepRecord> records;
  records.reserve(static_cast<std::size_t>(p.n_blocks * p.n_steps));
  for (int b = 0; b < p.n_blocks; ++b) {
    const int cap = p.bicgstab_max_iters[static_cast<std::size_t>(b)];
    for (int s = 0; s < p.n_steps; ++s) {
      TfpmStepResult r = tfpm_step(u, f, p, cap);
      u = std::move(r.u);
      records.push_back({b, s, cap, r.solve, r.stats});
      if (observe) observe(records.back(), u);
    }
  }
  return {std::move(u), std::move(records)};
}

}  // namespace chseg
