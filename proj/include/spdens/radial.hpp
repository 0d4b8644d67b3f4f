#pragma once

// Shifted radial integrals J(eta) = ∫ F(|xi + eta|) mu(dxi) for isotropic
// profiles F, the workhorse behind g, g1, the increment integrals and (A3).

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "spdens/spectral_kernels.hpp"

namespace spdens {

/// Large-q behaviour of a radial profile, used beyond the integration cutoff.
struct TailModel {
  enum class Kind {
    Trig,       // F(q) = q^{-power} (c0 + sum c_i cos(f_i q)) exactly for large q
    Gaussian,   // 0 <= F(q) <= amp exp(-rate q^2)
    Empirical,  // F(q) ~ c q^{-power}, c estimated from samples near the cutoff
    Unknown,    // convergence judged by cutoff doubling alone
  };
  Kind kind = Kind::Unknown;
  double power = 0.0;
  double c0 = 0.0;
  std::vector<std::pair<double, double>> cosines;  // (c_i, f_i)
  /// Trig only: an extra abs_sin_coef |sin(abs_sin_freq q)| q^{-power} term.
  double abs_sin_coef = 0.0;
  double abs_sin_freq = 0.0;
  double rate = 0.0;
  double amp = 1.0;
};

struct RadialProfile {
  std::function<double(double)> value;
  double panel = 1.0;        // quadrature panel width
  double core = 1.0;         // unit for the cutoff radius
  double min_cutoff = 0.0;   // the tail model holds only beyond this radius
  bool oscillatory = true;   // false lets panels grow geometrically
  TailModel tail;
};

struct RadialQuadOptions {
  /// Cutoff radius beyond the shift, in units of RadialProfile::core.
  double radial_cutoff = 40.0;
  /// Relative tolerance for the tail error bound (or the doubling change).
  double tail_tolerance = 1e-4;
  int max_doublings = 12;
};

struct QuadValue {
  double value = 0.0;
  double tail = 0.0;
  double error_bound = 0.0;
  double cutoff = 0.0;
  bool diverged = false;
};

/// ∫_{S^{d-1}} |rho theta - eta|^{beta-d} dtheta for |eta| = e.
double riesz_spherical_mean(double rho, double e, double beta, int d);

/// ∫_R^∞ cos(f q) q^{-m} dq for m > 1, f >= 0, R > 0.
double cos_power_tail(double f, double R, double m);

/// J at a shift of length e. Riesz measures use the spherical mean of the
/// weight around the shift; radial densities use polar coordinates centred at
/// the shift; atoms are summed with the shift along the first axis.
QuadValue shifted_integral(const RadialProfile& F, const SpectralMeasure& mu, double e,
                           const RadialQuadOptions& opt = {});

/// Polar-coordinates route for Riesz measures (reference implementation).
QuadValue shifted_integral_angular(const RadialProfile& F, const SpectralMeasure& mu, double e,
                                   const RadialQuadOptions& opt = {});

/// Exact sum over atoms at an arbitrary shift vector.
double atom_sum(const RadialProfile& F, const SpectralMeasure& mu, std::span<const double> eta);

struct ShiftSup {
  double value = 0.0;
  double shift = 0.0;  // |eta| of the best shift
  bool diverged = false;
  double error_bound = 0.0;
};

/// Supremum over eta of J(eta): eta = 0, the radii unit * eta_grid, then
/// golden-section refinement around the best radius. Atom measures search a
/// candidate set built from -xi_i and the axis directions, then refine it by
/// compass search.
ShiftSup sup_over_shift(const RadialProfile& F, const SpectralMeasure& mu, double unit,
                        std::span<const double> eta_grid, const RadialQuadOptions& opt = {});

std::vector<double> default_eta_grid();

}  // namespace spdens
