#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>

#include "chseg/error.hpp"
#include "chseg/grid.hpp"
#include "chseg/spectral.hpp"

namespace chseg {

/// Constants of the full evolution model and its spectral time stepping.
struct ModelParams {
  double epsilon = 1.0;  // interface width
  double lambda = 1.0;   // fidelity weight
  double mu = 1.0;       // curvature weight
  double beta = 1.0;     // edge-detector sharpness
  double delta = 1e-8;   // regularizer for |grad u| and region means
  double dt = 0.1;
  double tol = 1e-5;
  int n_max = 10;

  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw InvalidArgument(std::string("invalid model parameter: ") + what);
    };
    require(epsilon > 0.0 && std::isfinite(epsilon), "epsilon must be > 0");
    require(lambda > 0.0 && std::isfinite(lambda), "lambda must be > 0");
    require(mu >= 0.0 && std::isfinite(mu), "mu must be >= 0");
    require(beta >= 0.0 && std::isfinite(beta), "beta must be >= 0");
    require(delta > 0.0 && std::isfinite(delta), "delta must be > 0");
    require(dt > 0.0 && std::isfinite(dt), "dt must be > 0");
    require(tol > 0.0 && std::isfinite(tol), "tol must be > 0");
    require(n_max >= 1, "n_max must be >= 1");
  }
};

/// Mean intensities inside (c1) and outside (c2) the region weighted by u.
struct RegionStats {
  double c1 = 0.0;
  double c2 = 0.0;
};

/// g = 1 / (1 + beta |grad f|^2) with unit pixel spacing: central
/// differences inside, first-order one-sided differences on the border.
inline ScalarField edge_detector(const ScalarField& f, double beta) {
  const std::size_t nx = f.nx(), ny = f.ny();
  ScalarField g(f.grid());
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) {
      double fx, fy;
      if (i == 0) {
        fx = f(1, j) - f(0, j);
      } else if (i == nx - 1) {
        fx = f(i, j) - f(i - 1, j);
      } else {
        fx = 0.5 * (f(i + 1, j) - f(i - 1, j));
      }
      if (j == 0) {
        fy = f(i, 1) - f(i, 0);
      } else if (j == ny - 1) {
        fy = f(i, j) - f(i, j - 1);
      } else {
        fy = 0.5 * (f(i, j + 1) - f(i, j - 1));
      }
      g(i, j) = 1.0 / (1.0 + beta * (fx * fx + fy * fy));
    }
  }
  return g;
}

/// Spectrum of div(g grad u) given the spectral gradient of u.
inline SpectralField diffusion_spectrum(SpectralOps& ops, const ScalarField& g, const ScalarField& ux,
                                        const ScalarField& uy) {
  g.check_same(ux);
  ScalarField fx = ux, fy = uy;
  for (std::size_t k = 0; k < g.size(); ++k) {
    fx[k] *= g[k];
    fy[k] *= g[k];
  }
  return ops.divergence_spectrum(fx, fy);
}

/// A = div(g grad u): gradient spectrally, product pointwise, divergence
/// spectrally.
inline ScalarField diffusion_term(SpectralOps& ops, const ScalarField& u, const ScalarField& g) {
  auto [ux, uy] = ops.gradient(u);
  return ops.idft(diffusion_spectrum(ops, g, ux, uy));
}

/// Spectrum of div(grad u / (|grad u| + delta)) given the spectral gradient.
inline SpectralField curvature_spectrum(SpectralOps& ops, const ScalarField& ux, const ScalarField& uy,
                                        double delta) {
  ScalarField nx = ux, ny = uy;
  for (std::size_t k = 0; k < ux.size(); ++k) {
    const double inv = 1.0 / (std::hypot(ux[k], uy[k]) + delta);
    nx[k] *= inv;
    ny[k] *= inv;
  }
  return ops.divergence_spectrum(nx, ny);
}

/// B = div(grad u / (|grad u| + delta)), all derivatives spectral.
inline ScalarField curvature_term(SpectralOps& ops, const ScalarField& u, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("curvature regularizer delta must be > 0");
  auto [ux, uy] = ops.gradient(u);
  return ops.idft(curvature_spectrum(ops, ux, uy, delta));
}

inline double double_well_prime(double u) { return 4.0 * u * u * u - 4.0 * u; }

/// W'(u) = 4u^3 - 4u for W(u) = (u^2 - 1)^2.
inline ScalarField double_well_prime(const ScalarField& u) {
  ScalarField out(u.grid());
  for (std::size_t k = 0; k < u.size(); ++k) out[k] = double_well_prime(u[k]);
  return out;
}

inline RegionStats region_means(const ScalarField& u, const ScalarField& f, double delta) {
  u.check_same(f);
  double su = 0.0, suf = 0.0, sv = 0.0, svf = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    su += u[k];
    suf += u[k] * f[k];
    sv += 1.0 - u[k];
    svf += (1.0 - u[k]) * f[k];
  }
  return {suf / (su + delta), svf / (sv + delta)};
}

/// D = -lambda [u (f - c1)^2 - (1 - u)(f - c2)^2].
inline ScalarField fidelity_term(const ScalarField& u, const ScalarField& f, const RegionStats& stats,
                                 double lambda) {
  u.check_same(f);
  ScalarField d(u.grid());
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double in = f[k] - stats.c1;
    const double out = f[k] - stats.c2;
    d[k] = -lambda * (u[k] * in * in - (1.0 - u[k]) * out * out);
  }
  return d;
}

/// Spectrum of P = (2/epsilon) Laplacian(W'(u)).
inline SpectralField lyapunov_spectrum(SpectralOps& ops, const ScalarField& u, double epsilon) {
  SpectralField w_hat = ops.fdft(double_well_prime(u));
  const auto k2 = ops.workspace().k2();
  const double s = 2.0 / epsilon;
  for (std::size_t k = 0; k < w_hat.size(); ++k) w_hat[k] *= -s * k2[k];
  return w_hat;
}

inline ScalarField lyapunov_term(SpectralOps& ops, const ScalarField& u, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  return ops.idft(lyapunov_spectrum(ops, u, epsilon));
}

}  // namespace chseg
