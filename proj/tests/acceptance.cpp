// Acceptance run: one PASS/FAIL line per criterion with the measured values.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "chseg/cli.hpp"
#include "chseg/fsm.hpp"
#include "chseg/krylov.hpp"
#include "chseg/pipeline.hpp"
#include "chseg/tfpm.hpp"
#include "oracles.hpp"

using namespace chseg;
using std::numbers::pi;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ScalarField periodic_field(const GridSpec& g, auto fn) {
  ScalarField out(g);
  for (std::size_t i = 0; i < g.nx; ++i) {
    for (std::size_t j = 0; j < g.ny; ++j) out(i, j) = fn(g.lx * double(i) / double(g.nx), g.ly * double(j) / double(g.ny));
  }
  return out;
}

double rel_err(const ScalarField& got, const ScalarField& want) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < got.size(); ++k) {
    num = std::max(num, std::abs(got[k] - want[k]));
    den = std::max(den, std::abs(want[k]));
  }
  return num / den;
}

ScalarField noisy_disk(const GridSpec& g, double sigma, std::uint64_t seed) {
  return add_gaussian_noise({"disk", make_centered_disk(g), "", g.ny, g.nx}, {sigma, seed}).pixels;
}

Outcome ac1() {
  const GridSpec g{64, 64, 3.0, 3.0};
  SpectralOps ops(g);
  const double k = 2 * pi / g.lx;
  const ScalarField s = periodic_field(g, [&](double x, double) { return std::sin(k * x); });
  const ScalarField c = periodic_field(g, [&](double x, double) { return k * std::cos(k * x); });
  const ScalarField sy = periodic_field(g, [&](double, double y) { return std::sin(k * y); });
  const ScalarField cy = periodic_field(g, [&](double, double y) { return k * std::cos(k * y); });
  const double e_lap = rel_err(ops.laplacian(s), -k * k * s);
  const auto [gx, gy] = ops.gradient(s);
  const auto [hx, hy] = ops.gradient(sy);
  const double e_grad = std::max({rel_err(gx, c), rel_err(hy, cy), gy.l2_norm() / c.l2_norm(), hx.l2_norm() / c.l2_norm()});
  const double e_div = std::max(rel_err(ops.divergence(s, ScalarField(g)), c), rel_err(ops.divergence(ScalarField(g), sy), cy));
  const double worst = std::max({e_lap, e_grad, e_div});
  return {worst < 1e-10, fmt("laplacian %.2e gradient %.2e divergence %.2e", e_lap, e_grad, e_div)};
}

Outcome ac2() {
  const GridSpec g{64, 64, 1.0, 1.0};
  SpectralOps ops(g);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    ScalarField f(g);
    for (double& v : f) v = u(rng);
    worst = std::max(worst, max_abs_diff(ops.idft(ops.fdft(f)), f));
  }
  return {worst < 1e-12, fmt("max round-trip error %.2e over 100 fields", worst)};
}

Outcome ac3() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0.0, worst_res = 0.0;
  bool all_conv = true, contract = true;
  for (int t = 0; t < 20; ++t) {
    const oracle::Dense m = oracle::diagonally_dominant(100, rng);
    std::vector<double> b(100);
    for (double& v : b) v = u(rng);
    const auto want = oracle::lu_solve(m, b);
    auto [x, st] = bicgstab([&](const std::vector<double>& y) { return m * y; }, b, std::vector<double>(100, 0.0),
                            1e-12, 1000);
    all_conv = all_conv && st.converged;
    for (std::size_t k = 0; k < 100; ++k) worst = std::max(worst, std::abs(x[k] - want[k]));
    auto r = m * x;
    double rn = 0.0, bn = 0.0;
    for (std::size_t k = 0; k < 100; ++k) {
      rn += (b[k] - r[k]) * (b[k] - r[k]);
      bn += b[k] * b[k];
    }
    rn = std::sqrt(rn);
    bn = std::sqrt(bn);
    worst_res = std::max(worst_res, rn / bn);
    contract = contract && rn <= std::max(1e-12 * bn, kResidualFloor) && std::abs(rn - st.residual_norm) < 1e-15;
  }
  return {all_conv && contract && worst < 1e-8,
          fmt("max |x - x_LU| %.2e, max true relative residual %.2e, all converged %d", worst, worst_res, all_conv)};
}

Outcome ac4() {
  const GridSpec g{8, 8, 1.0, 1.0};
  std::mt19937_64 rng(404);
  auto field = [&](double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    ScalarField f(g);
    for (double& v : f) v = d(rng);
    return f;
  };
  double op_err = 0.0;
  for (int t = 0; t < 20; ++t) {
    const TfpmSystem s{g, field(0.1, 1.0), field(4.0, 12.0), field(0, 2), field(0, 1), field(0, 1), field(0, 1), 0.02, 1.0};
    const StackedField w(field(-1, 1), field(-1, 1));
    const auto want = oracle::assemble_tfpm_dense(s) * std::vector<double>(w.begin(), w.end());
    const StackedField got = apply_operator(s, w);
    for (std::size_t k = 0; k < want.size(); ++k) op_err = std::max(op_err, std::abs(got[k] - want[k]));
  }
  TfpmParams p;
  p.tol = 1e-12;
  double step_err = 0.0;
  bool conv = true;
  for (int t = 0; t < 5; ++t) {
    const ScalarField u_n = field(0, 1), f = field(0, 1);
    const TfpmSystem s = assemble(u_n, f, region_means(u_n, f, p.delta), p);
    const StackedField rhs = s.rhs();
    const auto x = oracle::lu_solve(oracle::assemble_tfpm_dense(s), std::vector<double>(rhs.begin(), rhs.end()));
    const TfpmStepResult r = tfpm_step(u_n, f, p, 2000);
    conv = conv && r.solve.converged;
    for (std::size_t k = 0; k < 64; ++k) step_err = std::max(step_err, std::abs(r.u[k] - std::clamp(x[k], 0.0, 1.0)));
  }
  return {op_err < 1e-12 && step_err < 1e-8 && conv,
          fmt("operator max diff %.2e over 20 draws, step max diff %.2e vs dense LU", op_err, step_err)};
}

Outcome ac5() {
  const GridSpec g = GridSpec::with_spacing(64, 64, PipelineParams{}.spacing);
  SpectralOps ops(g);
  double fsm = 0.0, tfpm = 0.0, pipe = 0.0;
  for (double c : {0.0, 0.3, 0.5, 0.8, 1.0}) {
    const ScalarField u(g, c);
    const FsmState s = fsm_step(ops, fsm_initial_state(ops, u), u, edge_detector(u, 1.0), ModelParams{});
    fsm = std::max(fsm, max_abs_diff(s.u, u));
    tfpm = std::max(tfpm, max_abs_diff(tfpm_step(u, u, TfpmParams{}, 25).u, u));
    pipe = std::max(pipe, max_abs_diff(segment_field(ops, u, PipelineParams{}).u_final, u));
  }
  return {fsm <= 1e-10 && tfpm <= 1e-10 && pipe <= 1e-10,
          fmt("drift fsm_step %.2e tfpm_step %.2e pipeline %.2e", fsm, tfpm, pipe)};
}

Outcome ac6() {
  const PipelineParams p;
  const GridSpec g = GridSpec::with_spacing(256, 256, p.spacing);
  SpectralOps ops(g);
  Outcome out;
  const StabilityReport cond = check_conditions(0.02, 1.0, 1.0, {8.5, 1.0 / 3.0, 1.0});
  out.pass = cond.satisfied && cond.cond1 > 0 && cond.cond2 > 0;
  out.detail = fmt("cond1 %.4f cond2 %.4f;", cond.cond1, cond.cond2);
  for (double sigma : {0.3, 0.5, 0.7}) {
    const auto t0 = std::chrono::steady_clock::now();
    const SegmentationResult r = segment_field(ops, noisy_disk(g, sigma, 42), p);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = r.fsm_min >= 0.0 && r.fsm_max <= 1.0 && r.stability.k_empirical <= 8.0 &&
                    r.stability.flagged_steps.empty() && r.stability.satisfied && secs < 60.0;
    out.pass = out.pass && ok;
    out.detail += fmt(" sigma %.1f: range [%.3f, %.3f] K %.3f flags %zu %.1fs;", sigma, r.fsm_min, r.fsm_max,
                      r.stability.k_empirical, r.stability.flagged_steps.size(), secs);
  }
  return out;
}

Outcome ac7() {
  const PipelineParams p;
  const GridSpec g = GridSpec::with_spacing(128, 128, p.spacing);
  SpectralOps ops(g);
  const ScalarField clean = make_centered_disk(g);
  const BinaryMask truth = to_mask(clean);
  const double clean_dice = dice(segment_field(ops, clean, p).mask, truth);
  const ScalarField noisy = noisy_disk(g, 0.5, 42);
  const BinaryMask pred = segment_field(ops, noisy, p).mask;
  const BinaryMask base = threshold(noisy);
  const double d = dice(pred, truth), d0 = dice(base, truth);
  const double h = hd95(pred, truth), h0 = hd95(base, truth);
  return {clean_dice >= 0.99 && d > d0 && h < h0,
          fmt("clean Dice %.4f (need >= 0.99); sigma 0.5 Dice %.4f vs baseline %.4f, HD95 %.3f vs baseline %.3f",
              clean_dice, d, d0, h, h0)};
}

Outcome ac8() {
  std::mt19937_64 rng(88);
  std::uniform_int_distribution<std::size_t> side(1, 32);
  std::uniform_real_distribution<double> dens(0.05, 0.7);
  bool region_exact = true, identity = true;
  double hd_err = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t nx = side(rng), ny = side(rng);
    BinaryMask a = oracle::random_mask(nx, ny, dens(rng), rng), b = oracle::random_mask(nx, ny, dens(rng), rng);
    if (a.empty()) a.set(0, 0);
    if (b.empty()) b.set(nx - 1, ny - 1);
    const oracle::Counts c = oracle::count(a, b);
    const double d = 2.0 * double(c.both) / double(c.a + c.b), j = double(c.both) / double(c.either);
    region_exact = region_exact && dice(a, b) == d && jaccard(a, b) == j;
    identity = identity && std::abs(dice(a, b) - 2 * jaccard(a, b) / (1 + jaccard(a, b))) < 1e-12;
    hd_err = std::max(hd_err, std::abs(hd95(a, b) - oracle::hd95(a, b)));
  }
  return {region_exact && identity && hd_err < 1e-9,
          fmt("region metrics exact %d, dice identity %d, max hd95 diff %.2e", region_exact, identity, hd_err)};
}

Outcome ac9() {
  const GridSpec g{64, 64, 3 * pi, 3 * pi};
  SpectralOps ops(g);
  ModelParams p;
  p.lambda = 0.0;
  p.mu = 0.0;
  const double a = 1e-6, k = 2 * pi / g.lx;
  const ScalarField u = periodic_field(g, [&](double x, double) { return a * std::sin(k * x); });
  const FsmState s0 = fsm_initial_state(ops, u);
  const SpectralField next = fsm_spectral_update(ops, s0, ScalarField(g), ScalarField(g, 1.0), p);
  const double factor = next(1, 0).imag() / s0.u_hat(1, 0).imag();
  const double want = 1.0 - p.dt * (std::pow(k, 4) - 8.0 * k * k);
  const double rel = std::abs(factor - want) / std::abs(want);
  return {rel < 1e-3, fmt("factor %.8f expected %.8f rel diff %.2e", factor, want, rel)};
}

Outcome ac10() {
  const fs::path dir = oracle::scratch_dir("acceptance_det");
  const GridSpec g = GridSpec::with_spacing(96, 96, 1.0);
  for (int k = 0; k < 3; ++k) {
    const double c = 47.5 + 6.0 * (k - 1);
    const ScalarField d = make_disk(g, 24.0, c, 95.0 - c);
    fs::create_directories(dir / "img");
    fs::create_directories(dir / "gt");
    save_field_png(d, dir / "img" / ("d" + std::to_string(k) + ".png"));
    save_mask(to_mask(d), dir / "gt" / ("d" + std::to_string(k) + ".png"));
  }
  RunConfig cfg;
  cfg.inputs = {(dir / "img").string()};
  cfg.gt_dir = (dir / "gt").string();
  cfg.size = 96;
  cfg.sigma = 0.5;
  cfg.seed = 42;
  std::ostringstream log, err;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  cfg.out_dir = (dir / "run1").string();
  const int rc1 = cli::cmd_segment(cfg, log, err);
  cfg.out_dir = (dir / "run2").string();
  const int rc2 = cli::cmd_segment(cfg, log, err);
  bool same = rc1 == 0 && rc2 == 0 && slurp(dir / "run1/metrics.csv") == slurp(dir / "run2/metrics.csv");
  for (int k = 0; k < 3; ++k) {
    const std::string m = "masks/d" + std::to_string(k) + ".png";
    same = same && !slurp(dir / "run1" / m).empty() && slurp(dir / "run1" / m) == slurp(dir / "run2" / m);
  }
  fs::remove_all(dir);
  return {same, fmt("exit codes %d/%d, masks and metrics.csv bit-identical %d", rc1, rc2, same)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_s;  // <= 0: no runtime limit
    std::function<Outcome()> run;
  };
  const Criterion all[] = {
      {"AC1", 1.0, ac1},  {"AC2", 5.0, ac2},  {"AC3", 10.0, ac3}, {"AC4", 30.0, ac4},  {"AC5", 0.0, ac5},
      {"AC6", 180.0, ac6}, {"AC7", 60.0, ac7}, {"AC8", 0.0, ac8},  {"AC9", 0.0, ac9}, {"AC10", 0.0, ac10},
  };
  int failed = 0;
  for (const auto& c : all) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs >= c.limit_s) {
      o.pass = false;
      o.detail += fmt(" [over the %.0f s limit]", c.limit_s);
    }
    failed += !o.pass;
    std::printf("%s %s (%.2f s) %s\n", c.name, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(std::size(all)) - failed, std::size(all));
  return failed == 0 ? 0 : 1;
}
