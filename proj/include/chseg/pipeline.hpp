#pragma once

#include <chrono>
#include <cstddef>
#include <utility>
#include <vector>

#include "chseg/field_ops.hpp"
#include "chseg/fsm.hpp"
#include "chseg/grid.hpp"
#include "chseg/imageio.hpp"
#include "chseg/metrics.hpp"
#include "chseg/spectral.hpp"
#include "chseg/stability.hpp"
#include "chseg/tfpm.hpp"

namespace chseg {

/// Every tunable of the F -> T -> threshold pipeline.
struct PipelineParams {
  ModelParams model;
  int f_blocks = 5;
  TfpmParams tfpm;
  StabilityConfig stability = StabilityConfig::defaults_for(1.0);
  double threshold = 0.5;
  /// Length units between neighbouring pixels on the spectral grid.
  double spacing = 13.0;

  void validate() const {
    model.validate();
    tfpm.validate();
    if (f_blocks < 1) throw InvalidArgument("f_blocks must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("threshold must lie in (0, 1)");
    if (!(spacing > 0.0)) throw InvalidArgument("spacing must be > 0");
  }
};

struct SegmentationResult {
  ScalarField u_f;      // output of the spectral stage
  ScalarField u_final;  // output of the tailored-finite-point stage
  BinaryMask mask;
  std::vector<FsmTrace> f_traces;
  std::vector<TfpmStepRecord> t_records;
  StabilityReport stability;
  double fsm_min = 0.0;  // extrema over every spectral iterate
  double fsm_max = 0.0;
  double f_seconds = 0.0;
  double t_seconds = 0.0;
};

/// Spectral stage: f_blocks successive solves sharing g = g(grad f), each
/// starting from the previous block's output (the first from f).
inline ScalarField run_f_module(SpectralOps& ops, const ScalarField& f, const PipelineParams& p,
                                std::vector<FsmTrace>& traces, const FsmObserver& observe = {}) {
  const ScalarField g = edge_detector(f, p.model.beta);
  ScalarField u = f;
  traces.clear();
  for (int b = 0; b < p.f_blocks; ++b) {
    FsmTrace trace;
    u = fsm_solve(ops, f, u, g, p.model, trace, observe);
    traces.push_back(std::move(trace));
  }
  return u;
}

/// threshold(T(F(f))): the spectral output feeds the tailored stage
/// unchanged, and the final field is binarized at p.threshold.
inline SegmentationResult segment_field(SpectralOps& ops, const ScalarField& f, const PipelineParams& p) {
  p.validate();
  SegmentationResult res;
  res.fsm_min = f.min();
  res.fsm_max = f.max();
  StabilityMonitor monitor;
  double k_fsm = empirical_K(f);

  const auto t0 = std::chrono::steady_clock::now();
  res.u_f = run_f_module(ops, f, p, res.f_traces, [&](const FsmState& s) {
    res.fsm_min = std::min(res.fsm_min, s.u.min());
    res.fsm_max = std::max(res.fsm_max, s.u.max());
    k_fsm = std::max(k_fsm, empirical_K(s.u));
  });
  const auto t1 = std::chrono::steady_clock::now();

  monitor.observe(res.u_f);
  auto [u, records] = tfpm_solve(res.u_f, f, p.tfpm, [&](const TfpmStepRecord&, const ScalarField& un) {
    monitor.observe(un);
  });
  const auto t2 = std::chrono::steady_clock::now();

  res.u_final = std::move(u);
  res.t_records = std::move(records);
  res.stability = monitor.report(check_conditions(p.tfpm.tau, p.tfpm.epsilon, p.tfpm.lambda, p.stability));
  res.stability.k_empirical = std::max(res.stability.k_empirical, k_fsm);
  res.mask = threshold(res.u_final, p.threshold);
  res.f_seconds = std::chrono::duration<double>(t1 - t0).count();
  res.t_seconds = std::chrono::duration<double>(t2 - t1).count();
  return res;
}

}  // namespace chseg
