#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "chseg/error.hpp"
#include "chseg/grid.hpp"
#include "chseg/tfpm.hpp"

namespace chseg {

/// Constants of the sufficient stability conditions for the TFPM scheme.
/// K bounds W''(u^n) from above; gamma comes from Young's inequality; c1
/// is the fidelity constant.
struct StabilityConfig {
  double K = 8.5;
  double gamma = 1.0 / 3.0;
  double c1 = 1.0;

  /// gamma = 2 (K - 8) / (3 eps^2), which makes cond2 equal eps / 2.
  static StabilityConfig defaults_for(double epsilon, double K = 8.5, double c1 = 1.0) {
    return {K, 2.0 * (K - 8.0) / (3.0 * epsilon * epsilon), c1};
  }
};

struct NormSample {
  double u_norm = 0.0;
  double lap_norm = 0.0;
  bool flagged = false;
};

struct StabilityReport {
  double cond1 = 0.0;
  double cond2 = 0.0;
  bool satisfied = false;
  std::string note;  // why the conditions cannot hold, if applicable
  double k_empirical = 0.0;
  std::vector<NormSample> norms;
  std::vector<std::size_t> flagged_steps;
};

/// Evaluates
///   cond1 = 1/(2 tau) - (K - 8) gamma / (3 eps) - 6/eps + c1 lambda / 2
///   cond2 = eps - (K - 8) / (3 eps gamma)
inline StabilityReport check_conditions(double tau, double epsilon, double lambda, const StabilityConfig& cfg) {
  if (!(tau > 0.0) || !(epsilon > 0.0) || !(lambda > 0.0) || !(cfg.gamma > 0.0) || !(cfg.c1 > 0.0)) {
    throw InvalidArgument("stability check needs positive tau, epsilon, lambda, gamma and C1");
  }
  StabilityReport rep;
  const double km8 = cfg.K - 8.0;
  rep.cond1 = 1.0 / (2.0 * tau) - km8 * cfg.gamma / (3.0 * epsilon) - 6.0 / epsilon + cfg.c1 * lambda / 2.0;
  rep.cond2 = epsilon - km8 / (3.0 * epsilon * cfg.gamma);
  if (km8 <= 0.0) {
    rep.satisfied = false;
    rep.note = "K <= 8: the bound (K - 8)/12 on |u^2 - 1| is not positive, so the estimate does not apply";
    return rep;
  }
  rep.satisfied = rep.cond1 > 0.0 && rep.cond2 > 0.0;
  return rep;
}

/// max over the grid of W''(u) = 12 u^2 - 4.
inline double empirical_K(const ScalarField& u) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : u) m = std::max(m, 12.0 * v * v - 4.0);
  return m;
}

/// Records ||u^n|| and ||Lap u^n|| (reflective five-point stencil) per step
/// and flags steps where either exceeds ten times its initial value.
inline StabilityReport monitor(std::span<const ScalarField> history, double growth_limit = 10.0) {
  if (history.empty()) throw InvalidArgument("stability monitor needs a nonempty history");
  StabilityReport rep;
  rep.k_empirical = -std::numeric_limits<double>::infinity();
  for (const ScalarField& u : history) {
    rep.norms.push_back({u.l2_norm(), neumann_laplacian(u).l2_norm(), false});
    rep.k_empirical = std::max(rep.k_empirical, empirical_K(u));
  }
  const NormSample first = rep.norms.front();
  for (std::size_t n = 0; n < rep.norms.size(); ++n) {
    NormSample& s = rep.norms[n];
    s.flagged = s.u_norm > growth_limit * first.u_norm || s.lap_norm > growth_limit * first.lap_norm;
    if (s.flagged) rep.flagged_steps.push_back(n);
  }
  return rep;
}

/// Streaming form of monitor() for long runs where keeping every iterate
/// is wasteful.
class StabilityMonitor {
 public:
  explicit StabilityMonitor(double growth_limit = 10.0) : limit_(growth_limit) {
    report_.k_empirical = -std::numeric_limits<double>::infinity();
  }

  void observe(const ScalarField& u) {
    NormSample s{u.l2_norm(), neumann_laplacian(u).l2_norm(), false};
    if (report_.norms.empty()) {
      first_ = s;
    } else {
      s.flagged = s.u_norm > limit_ * first_.u_norm || s.lap_norm > limit_ * first_.lap_norm;
    }
    if (s.flagged) report_.flagged_steps.push_back(report_.norms.size());
    report_.norms.push_back(s);
    report_.k_empirical = std::max(report_.k_empirical, empirical_K(u));
  }

  /// Merges the accumulated norms into a report carrying the conditions.
  StabilityReport report(const StabilityReport& conditions) const {
    StabilityReport out = conditions;
    out.k_empirical = report_.k_empirical;
    out.norms = report_.norms;
    out.flagged_steps = report_.flagged_steps;
    return out;
  }

  const StabilityReport& history() const { return report_; }

 private:
  double limit_;
  NormSample first_;
  StabilityReport report_;
};

}  // namespace chseg
