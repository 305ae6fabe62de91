#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "chseg/error.hpp"
#include "chseg/grid.hpp"

namespace chseg {

/// Largest imaginary residue tolerated when an inverse transform is folded
/// back to a real field.
inline constexpr double kImagResidueLimit = 1e-9;

/// Wavenumber tables for one grid. Immutable once built, so one instance can
/// back any number of SpectralOps on different threads.
class SpectralWorkspace {
 public:
  explicit SpectralWorkspace(const GridSpec& grid) : grid_(grid) {
    grid_.validate();
    kx_ = wavenumbers(grid_.nx, grid_.lx);
    ky_ = wavenumbers(grid_.ny, grid_.ly);
    kx_odd_ = odd_multipliers(kx_);
    ky_odd_ = odd_multipliers(ky_);
    k2_.resize(grid_.size());
    for (std::size_t m = 0; m < grid_.nx; ++m) {
      for (std::size_t n = 0; n < grid_.ny; ++n) k2_[m * grid_.ny + n] = kx_[m] * kx_[m] + ky_[n] * ky_[n];
    }
  }

  const GridSpec& grid() const { return grid_; }

  /// kx[m] = (2 pi / lx) m for m <= nx/2, (2 pi / lx)(m - nx) above.
  std::span<const double> kx() const { return kx_; }
  std::span<const double> ky() const { return ky_; }
  /// |k|^2 in row-major (m, n) order.
  std::span<const double> k2() const { return k2_; }
  double k2(std::size_t m, std::size_t n) const { return k2_[m * grid_.ny + n]; }

  /// Multipliers used for first derivatives. Identical to kx/ky except that
  /// the unpaired Nyquist bin of an even-length axis is zero, since i*k on
  /// that bin has no conjugate partner and would leave an imaginary result.
  std::span<const double> kx_odd() const { return kx_odd_; }
  std::span<const double> ky_odd() const { return ky_odd_; }

  static std::vector<double> wavenumbers(std::size_t n, double length) {
    std::vector<double> k(n);
    const double scale = 2.0 * std::numbers::pi / length;
    const std::size_t half = n / 2;
    for (std::size_t m = 0; m < n; ++m) {
      const double idx = m <= half ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(n);
      k[m] = scale * idx;
    }
    return k;
  }

 private:
  static std::vector<double> odd_multipliers(const std::vector<double>& k) {
    std::vector<double> out = k;
    if (out.size() % 2 == 0) out[out.size() / 2] = 0.0;
    return out;
  }

  GridSpec grid_;
  std::vector<double> kx_, ky_, kx_odd_, ky_odd_, k2_;
};

inline std::shared_ptr<const SpectralWorkspace> build_workspace(const GridSpec& grid) {
  return std::make_shared<const SpectralWorkspace>(grid);
}

namespace detail {

// The FFTW planner is not reentrant; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  fftw_complex* ptr = nullptr;
  explicit FftwBuffer(std::size_t n) : ptr(fftw_alloc_complex(n)) {
    if (ptr == nullptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

struct FftwPlan {
  fftw_plan plan = nullptr;
  FftwPlan(int nx, int ny, fftw_complex* in, fftw_complex* out, int sign) {
    std::lock_guard lock(fftw_planner_mutex());
    // ESTIMATE keeps plan selection independent of timing, so results are
    // reproducible run to run.
    plan = fftw_plan_dft_2d(nx, ny, in, out, sign, FFTW_ESTIMATE);
    if (plan == nullptr) throw Error("FFTW failed to create a plan");
  }
  ~FftwPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;
};

}  // namespace detail

/// Forward/inverse DFT and the spectral derivative operators on one grid.
///
/// Owns FFTW plans and scratch buffers, so an instance must not be shared
/// between threads. Create one per worker on top of a shared workspace.
class SpectralOps {
 public:
  explicit SpectralOps(std::shared_ptr<const SpectralWorkspace> ws)
      : ws_(std::move(ws)),
        in_(ws_->grid().size()),
        out_(ws_->grid().size()),
        forward_(static_cast<int>(ws_->grid().nx), static_cast<int>(ws_->grid().ny), in_.ptr, out_.ptr,
                 FFTW_FORWARD),
        backward_(static_cast<int>(ws_->grid().nx), static_cast<int>(ws_->grid().ny), in_.ptr, out_.ptr,
                  FFTW_BACKWARD) {}

  explicit SpectralOps(const GridSpec& grid) : SpectralOps(build_workspace(grid)) {}

  const SpectralWorkspace& workspace() const { return *ws_; }
  std::shared_ptr<const SpectralWorkspace> shared_workspace() const { return ws_; }
  const GridSpec& grid() const { return ws_->grid(); }

  /// Unnormalized forward transform.
  SpectralField fdft(const ScalarField& f) {
    check(f.grid());
    const std::size_t n = f.size();
    for (std::size_t k = 0; k < n; ++k) {
      in_.ptr[k][0] = f[k];
      in_.ptr[k][1] = 0.0;
    }
    fftw_execute(forward_.plan);
    SpectralField out(f.grid());
    for (std::size_t k = 0; k < n; ++k) out[k] = {out_.ptr[k][0], out_.ptr[k][1]};
    return out;
  }

  /// Inverse transform scaled by 1/(nx ny). Throws NumericalError if the
  /// discarded imaginary part exceeds kImagResidueLimit.
  ScalarField idft(const SpectralField& F) {
    check(F.grid());
    const std::size_t n = F.size();
    for (std::size_t k = 0; k < n; ++k) {
      in_.ptr[k][0] = F[k].real();
      in_.ptr[k][1] = F[k].imag();
    }
    fftw_execute(backward_.plan);
    const double scale = 1.0 / static_cast<double>(n);
    ScalarField out(F.grid());
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      out[k] = out_.ptr[k][0] * scale;
      worst = std::max(worst, std::abs(out_.ptr[k][1] * scale));
    }
    if (!(worst < kImagResidueLimit)) {
      throw NumericalError("inverse DFT left imaginary residue " + std::to_string(worst));
    }
    return out;
  }

  /// (du/dx, du/dy) from a precomputed spectrum of u.
  std::pair<ScalarField, ScalarField> gradient_from_spectrum(const SpectralField& u_hat) {
    SpectralField dx_hat(u_hat.grid()), dy_hat(u_hat.grid());
    const auto kx = ws_->kx_odd();
    const auto ky = ws_->ky_odd();
    const std::size_t ny = grid().ny;
    for (std::size_t m = 0; m < grid().nx; ++m) {
      for (std::size_t n = 0; n < ny; ++n) {
        const std::complex<double> c = u_hat(m, n);
        dx_hat(m, n) = std::complex<double>(0.0, kx[m]) * c;
        dy_hat(m, n) = std::complex<double>(0.0, ky[n]) * c;
      }
    }
    return {idft(dx_hat), idft(dy_hat)};
  }

  std::pair<ScalarField, ScalarField> gradient(const ScalarField& u) { return gradient_from_spectrum(fdft(u)); }

  /// Spectrum of div(vx, vy) = i (kx F{vx} + ky F{vy}).
  SpectralField divergence_spectrum(const ScalarField& vx, const ScalarField& vy) {
    vx.check_same(vy);
    SpectralField ax = fdft(vx);
    const SpectralField ay = fdft(vy);
    const auto kx = ws_->kx_odd();
    const auto ky = ws_->ky_odd();
    const std::size_t ny = grid().ny;
    for (std::size_t m = 0; m < grid().nx; ++m) {
      for (std::size_t n = 0; n < ny; ++n) {
        ax(m, n) = std::complex<double>(0.0, 1.0) * (kx[m] * ax(m, n) + ky[n] * ay(m, n));
      }
    }
    return ax;
  }

  ScalarField divergence(const ScalarField& vx, const ScalarField& vy) { return idft(divergence_spectrum(vx, vy)); }

  /// Multiplies a spectrum by -|k|^2 in place.
  void apply_laplacian(SpectralField& u_hat) const {
    const auto k2 = ws_->k2();
    for (std::size_t k = 0; k < u_hat.size(); ++k) u_hat[k] *= -k2[k];
  }

  ScalarField laplacian(const ScalarField& u) {
    SpectralField u_hat = fdft(u);
    apply_laplacian(u_hat);
    return idft(u_hat);
  }

 private:
  void check(const GridSpec& g) const {
    if (!g.same_shape(grid())) {
      throw ShapeMismatch("field " + std::to_string(g.nx) + "x" + std::to_string(g.ny) +
                          " does not match workspace " + std::to_string(grid().nx) + "x" +
                          std::to_string(grid().ny));
    }
  }

  std::shared_ptr<const SpectralWorkspace> ws_;
  detail::FftwBuffer in_;
  detail::FftwBuffer out_;
  detail::FftwPlan forward_;
  detail::FftwPlan backward_;
};

}  // namespace chseg
