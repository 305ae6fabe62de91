#pragma once

#include <chrono>
#include <complex>
#include <cstddef>
#include <functional>
#include <ostream>
#include <utility>
#include <vector>

#include "chseg/error.hpp"
#include "chseg/field_ops.hpp"
#include "chseg/grid.hpp"
#include "chseg/spectral.hpp"

namespace chseg {

/// Iterate of the spectral solver.
///
/// `u` is the clamped spatial field; `u_hat` is the spectrum carried between
/// steps, which is the pre-clamp transform of the last update (the clamp acts
/// on the spatial iterate only).
struct FsmState {
  ScalarField u;
  SpectralField u_hat;
  int n = 0;
  double rel_change = 0.0;
  RegionStats stats;
};

struct FsmTrace {
  std::vector<double> residuals;
  std::vector<RegionStats> stats;
  int iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;

  /// CSV with header step,rel_change,c1,c2.
  void write_csv(std::ostream& os) const {
    os << "step,rel_change,c1,c2\n";
    os.precision(17);
    for (std::size_t k = 0; k < residuals.size(); ++k) {
      os << k + 1 << ',' << residuals[k] << ',' << stats[k].c1 << ',' << stats[k].c2 << '\n';
    }
  }
};

inline FsmState fsm_initial_state(SpectralOps& ops, const ScalarField& u0) {
  FsmState s;
  s.u = u0;
  s.u_hat = ops.fdft(u0);
  return s;
}

/// Spectrum of the next iterate before the inverse transform and clamp.
/// Also reports the region means used for the fidelity term.
inline SpectralField fsm_spectral_update(SpectralOps& ops, const FsmState& state, const ScalarField& f,
                                         const ScalarField& g, const ModelParams& p, RegionStats* stats_out = nullptr) {
  const auto k2 = ops.workspace().k2();
  auto [ux, uy] = ops.gradient_from_spectrum(state.u_hat);

  // Transition state: u1 = u_hat + dt (eps |k|^2 A_hat + mu B_hat).
  const SpectralField a_hat = diffusion_spectrum(ops, g, ux, uy);
  const SpectralField b_hat = curvature_spectrum(ops, ux, uy, p.delta);
  SpectralField next = state.u_hat;
  for (std::size_t k = 0; k < next.size(); ++k) {
    next[k] += p.dt * (p.epsilon * k2[k] * a_hat[k] + p.mu * b_hat[k]);
  }

  // Region means and nonlinear terms use the clamped spatial iterate.
  const RegionStats stats = region_means(state.u, f, p.delta);
  ScalarField rhs = fidelity_term(state.u, f, stats, p.lambda);
  rhs += lyapunov_term(ops, state.u, p.epsilon);
  const SpectralField rhs_hat = ops.fdft(rhs);
  for (std::size_t k = 0; k < next.size(); ++k) next[k] += p.dt * rhs_hat[k];

  if (stats_out != nullptr) *stats_out = stats;
  return next;
}

/// One pass of the spectral loop body. g must be the edge detector of f.
inline FsmState fsm_step(SpectralOps& ops, const FsmState& state, const ScalarField& f, const ScalarField& g,
                         const ModelParams& p) {
  FsmState next;
  next.u_hat = fsm_spectral_update(ops, state, f, g, p, &next.stats);
  next.u = ops.idft(next.u_hat);
  if (!next.u.all_finite()) throw NumericalError("spectral step produced a non-finite field", state.n + 1);
  next.u.clamp(0.0, 1.0);
  next.n = state.n + 1;
  next.rel_change = (next.u - state.u).l2_norm() / (state.u.l2_norm() + p.delta);
  return next;
}

using FsmObserver = std::function<void(const FsmState&)>;

/// Runs the spectral iteration from u0 until the relative change drops to
/// tol or n_max steps have been taken.
inline ScalarField fsm_solve(SpectralOps& ops, const ScalarField& f, const ScalarField& u0, const ScalarField& g,
                             const ModelParams& p, FsmTrace& trace, const FsmObserver& observe = {}) {
  p.validate();
  f.check_same(u0);
  f.check_same(g);
  const auto start = std::chrono::steady_clock::now();
  trace = FsmTrace{};

  FsmState state = fsm_initial_state(ops, u0);
  do {
    state = fsm_step(ops, state, f, g, p);
    trace.residuals.push_back(state.rel_change);
    trace.stats.push_back(state.stats);
    if (observe) observe(state);
  } while (state.n < p.n_max && state.rel_change > p.tol);

  trace.iterations = state.n;
  trace.converged = state.rel_change <= p.tol;
  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return std::move(state.u);
}

/// Single block started from the image itself (u0 = f).
inline std::pair<ScalarField, FsmTrace> fsm_solve(SpectralOps& ops, const ScalarField& f, const ModelParams& p) {
  FsmTrace trace;
  const ScalarField g = edge_detector(f, p.beta);
  ScalarField u = fsm_solve(ops, f, f, g, p, trace);
  return {std::move(u), std::move(trace)};
}

}  // namespace chseg
