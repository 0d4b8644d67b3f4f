#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "spdens/radial.hpp"
#include "spdens/spectral_kernels.hpp"

namespace spdens {

struct QuadratureConfig {
  /// Radial cutoff in units of the kernel length scale.
  double radial_cutoff = 40.0;
  double tail_tolerance = 1e-4;
  /// Quadrature panels per oscillation period of |F Lambda|^2.
  int panel_count = 2;
  /// Shift radii for the sup over eta, in units of the kernel length scale.
  std::vector<double> eta_grid;
  /// Evaluation times; empty selects 16 geometric points in [T/100, T].
  std::vector<double> time_grid;
  /// Upper end of the small-time window for the gamma fit; 0 selects T/2.
  double t0 = 0.0;
  /// Sub-grid size for the inner sup over r in (s, s+h) of (A3).
  int sup_subgrid = 16;
  /// Ratio-2 levels of the graded time quadrature toward 0.
  int time_levels = 16;

  void validate() const;
  RadialQuadOptions radial_options() const;
  std::vector<double> times(double T) const;
  std::vector<double> shifts() const;
  double small_time_limit(double T) const { return t0 > 0.0 ? t0 : 0.5 * T; }
};

/// Radial profiles q -> F(q) fed to the shifted-integral engine.
RadialProfile kernel_sq_profile(const SpectralKernel& k, double s, int d, int panels_per_period = 2);
RadialProfile kernel_diff_profile(const SpectralKernel& k, double a, double b, int d,
                                  int panels_per_period = 2);
/// q -> sup_{s<r<s+h} |F Lambda(r)(q) - F Lambda(s)(q)|^2. Exact for Wave (range
/// of sin over the phase interval) and Heat (monotone in r); Custom kernels use
/// the sub-grid r_j = s + j h / m, j = 1..m.
RadialProfile kernel_sup_diff_profile(const SpectralKernel& k, double s, double h, int m, int d,
                                      int panels_per_period = 2);

struct FunctionalValue {
  double value = 0.0;
  bool diverged = false;
  /// Set when a supremum comes from a numeric search (a lower estimate).
  bool numeric_sup = false;
};

/// ∫ |F Lambda(s)(xi + eta)|^2 mu(dxi) maximised over eta (or at eta = 0).
FunctionalValue spatial_integral(const ModelSpec& model, const QuadratureConfig& cfg, double s);
FunctionalValue sup_spatial_integral(const ModelSpec& model, const QuadratureConfig& cfg, double s);

FunctionalValue compute_g(const ModelSpec& model, const QuadratureConfig& cfg, double t);
FunctionalValue compute_g1(const ModelSpec& model, const QuadratureConfig& cfg, double t);
FunctionalValue compute_g2(const ModelSpec& model, const QuadratureConfig& cfg, double t);

struct FunctionalTable {
  std::vector<double> t, g, g1, g2;
  bool diverged = false;
  bool numeric_sup = false;
};

/// g, g1, g2 on an increasing time grid with cumulative quadrature.
FunctionalTable compute_functionals(const ModelSpec& model, const QuadratureConfig& cfg,
                                    std::span<const double> times);

struct Increments {
  double I1 = 0.0, I2 = 0.0, I3 = 0.0, I4 = 0.0;
  bool diverged = false;
};

Increments compute_increments(const ModelSpec& model, const QuadratureConfig& cfg, double s, double t);

struct A1Report {
  bool finite = false;
  std::pair<double, double> values;
};

A1Report check_A1(const ModelSpec& model, const QuadratureConfig& cfg);

struct A3Row {
  double h = 0.0, value1 = 0.0, value2 = 0.0;
};

struct A3Report {
  std::vector<A3Row> limits;
  bool diverged = false;
  /// Both values nonincreasing as h decreases along the grid.
  bool monotone = false;
  /// Log-log slopes of value1, value2 against h over the grid (positive means decay).
  double slope1 = 0.0, slope2 = 0.0;
};

A3Report check_A3(const ModelSpec& model, const QuadratureConfig& cfg, std::span<const double> h_grid);

// ---------------------------------------------------------------------------
// Exponent algebra

using Rational = boost::rational<long long>;

/// Exact rational for a double: dyadic when the denominator fits 2^20, else the
/// continued-fraction convergent with denominator <= 10^6.
Rational to_rational(double x);
double to_double(const Rational& r);
std::string to_string(const Rational& r);

enum class Provenance { Analytic, Fitted, Missing };
std::string to_string(Provenance p);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

struct ExactExponents {
  Rational delta, gamma, gamma1, gamma2, gamma_bar, s_max;
};

/// gamma_bar = (min(gamma1, gamma2) + delta) / gamma, s_max = 1 - 1/gamma_bar.
ExactExponents exponent_algebra(Rational delta, Rational gamma, Rational gamma1, Rational gamma2);

struct ExponentReport {
  double delta = 0.0, gamma = 0.0, gamma1 = 0.0, gamma2 = 0.0;
  double gamma_bar = 0.0, s_max = 0.0;
  Provenance prov_delta = Provenance::Missing, prov_gamma = Provenance::Missing;
  Provenance prov_gamma1 = Provenance::Missing, prov_gamma2 = Provenance::Missing;
  std::optional<ExactExponents> exact;
  std::map<std::string, FitResult> fit_diagnostics;

  bool complete() const;
  /// Recomputes gamma_bar and s_max from the four exponents.
  void finalize();
};

struct ExponentFamily {
  enum class Kind { WaveRiesz, WaveFinite, HeatRiesz, HeatFinite };
  Kind kind = Kind::WaveRiesz;
  Rational beta{0};
  /// Spatial dimension for the beta < min(2, d) check; 0 checks beta < 2 only.
  int d = 0;

  static ExponentFamily wave_riesz(Rational beta, int d = 0) { return {Kind::WaveRiesz, beta, d}; }
  static ExponentFamily wave_finite() { return {Kind::WaveFinite, Rational(0), 0}; }
  static ExponentFamily heat_riesz(Rational beta, int d = 0) { return {Kind::HeatRiesz, beta, d}; }
  static ExponentFamily heat_finite() { return {Kind::HeatFinite, Rational(0), 0}; }
};

std::string to_string(const ExponentFamily& f);

/// Endpoint of the stated smoothness interval: (2-beta)/(5-2beta), 2/5, 1/2, 1/2.
Rational closed_form_s_max(const ExponentFamily& family);

ExponentReport analytic_exponents(const ExponentFamily& family);

/// Built-in family of a model, if any.
std::optional<ExponentFamily> family_of(const ModelSpec& model);

FitResult fit_exponent(std::span<const std::pair<double, double>> points);

/// gamma from the small-time window, gamma1 and gamma2 from the full grid.
ExponentReport fitted_exponents(const FunctionalTable& table, double t0,
                                std::optional<FitResult> delta_fit = std::nullopt);

struct OptimalParameters {
  double alpha = 0.0;
  double rho = 2.0;
  double gamma = 0.0;
  std::optional<Rational> exact_alpha;
  /// alpha * rho * gamma_bar / 2, equal to 1 at the optimum.
  double boundary_product = 0.0;
  /// eps = (t/2) |h|^{rho/gamma}.
  double epsilon(double t, double h) const;
};

OptimalParameters optimal_parameters(const ExponentReport& report);

// ---------------------------------------------------------------------------
// Output

std::string exponent_report_json(const ExponentReport& report, int indent = 2);

struct IncrementRow {
  double tau = 0.0;
  Increments values;
};

/// Columns: t,g,g1,g2,tau,I1,I2,I3,I4 where I_k = I_k(s, s + tau) for the
/// fixed s used to build `increments` (one row per time-grid point).
void write_functionals_csv(std::ostream& os, const FunctionalTable& table,
                           std::span<const IncrementRow> increments);

}  // namespace spdens
