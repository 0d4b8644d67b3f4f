#pragma once

// Besov-space toolkit on uniform 1-d grids, kernel density estimation and
// Monte Carlo checks of the difference-quotient density criterion.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "spdens/hypothesis_verifier.hpp"
#include "spdens/spde_simulator.hpp"

namespace spdens {

struct GridFunction {
  double x0 = 0.0;
  double dx = 1.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
  /// Rectangle rule.
  double l1_norm() const;
  double integral() const;
  void validate() const;

  static GridFunction from_function(const std::function<double(double)>& f, double x0, double dx,
                                    std::size_t count);
};

/// Number of grid steps in h; throws unless h is a multiple of dx.
long long grid_steps(const GridFunction& f, double h);

/// (Delta_h^n f)(x) = sum_j (-1)^{n-j} C(n,j) f(x + j h) on the points where
/// every f(x + j h) lies on the grid.
GridFunction finite_difference(const GridFunction& f, double h, int n);

/// ||Delta_h^n f||_{L1} with f extended by zero outside its grid.
double difference_l1(const GridFunction& f, double h, int n);

/// ||f||_{L1} + max over h_grid of |h|^{-s} ||Delta_h^n f||_{L1}: a lower
/// estimate of the B^s_{1,inf} norm, f extended by zero.
double besov_norm(const GridFunction& f, double s, int n, std::span<const double> h_grid);

struct BesovReport {
  int n = 2;
  std::vector<double> s_grid;
  std::vector<double> norm_estimates;
  /// The same norms on the refined h-grid.
  std::vector<double> refined_estimates;
  std::vector<bool> stable;
  std::vector<double> h_grid;
  std::vector<double> difference_norms;  // ||Delta_h^n f||_{L1} on h_grid
  FitResult decay;                       // slope of log ||Delta_h^n f|| vs log h
  double decay_slope = 0.0;
  /// Largest s with every s' <= s stable.
  double s_empirical = 0.0;
};

/// Refinement halves the smallest h (not below dx) and inserts geometric
/// midpoints; a norm is stable when it moves by at most `tolerance` (relative).
std::vector<double> refine_h_grid(const GridFunction& f, std::span<const double> h_grid);
BesovReport besov_report(const GridFunction& f, int n, std::span<const double> s_grid,
                         std::span<const double> h_grid, double tolerance = 0.05);

struct DensityEstimate {
  GridFunction grid;
  double bandwidth = 0.0;
  std::size_t sample_count = 0;
};

/// Gaussian KDE on linear-binned samples over mean +- 6 sd. Without a
/// bandwidth the rule 1.06 sd m^{-1/5} applies.
DensityEstimate kde(std::span<const double> samples, std::optional<double> bandwidth = std::nullopt,
                    std::size_t grid_points = 2048);

/// L1 distance to a density, including the mass the density puts off the grid.
double l1_distance(const DensityEstimate& est, const std::function<double(double)>& pdf);

/// Physicists' Hermite polynomial.
double hermite(int n, double y);

/// ||phi^{(n)}||_{L1} for the centred Gaussian density with the given variance.
double gaussian_derivative_l1(int n, double variance);

struct TestFunction {
  std::string name;
  std::function<double(double)> f;
  double holder_norm = 0.0;  // sup|f| + alpha-Holder seminorm, evaluated on a grid
  double center = 0.0, width = 1.0;
};

/// sup |f| + max |f(x) - f(y)| / |x - y|^alpha over pairs of a uniform grid on [a, b].
double holder_norm(const std::function<double(double)>& f, double a, double b, double alpha,
                   std::size_t points = 1200);

/// exp(-1 / (1 - y^2)) with y = (x - center) / width.
TestFunction bump_function(double center, double width, double alpha);
/// |y|^alpha times the bump: Holder of order exactly alpha at the center.
TestFunction holder_spike(double center, double width, double alpha);
/// Bumps and spikes centred at center + k scale, k in {-1, 0, 1}, width = scale.
std::vector<TestFunction> standard_family(double center, double scale, double alpha);

struct DecayRow {
  double h = 0.0;
  std::size_t phi = 0;
  double estimate = 0.0;  // E[Delta_h^n phi(u)]
  double standard_error = 0.0;
  double normalized = 0.0;  // |estimate| / ||phi||
};

struct DecayReport {
  int n = 2;
  double alpha = 0.0;
  std::vector<DecayRow> rows;
  std::vector<double> h_grid;
  std::vector<double> sup_normalized;  // max over the family at each h
  FitResult fit;
  double a = 0.0;
  double besov_index = 0.0;  // a - alpha
};

DecayReport criterion_decay(std::span<const double> samples, const std::vector<TestFunction>& family, int n,
                            double alpha, std::span<const double> h_grid);

struct MasterBoundConfig {
  int n = 2;
  double alpha = 2.0 / 3.0;
  std::vector<double> eps_grid;
  std::vector<double> h_grid;
  /// When set, eps(h) = (t/2) |h|^{rho/gamma} snapped to the time grid replaces eps_grid.
  std::optional<std::pair<double, double>> eps_rule;
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Relative allowance on the calibrated bound.
  double slack = 0.1;
};

struct MasterBoundRow {
  double eps = 0.0, h = 0.0;
  double lhs = 0.0, lhs_se = 0.0;  // sup over the family of |E Delta_h^n phi(u)| / ||phi||
  double g_eps = 0.0;
  double smoothing_error = 0.0;    // E[(u - u^eps)^2]
  double rhs_shape = 0.0;          // |h|^n g(eps)^{-n/2} + E[(u - u^eps)^2]^{alpha/2}
  double bound = 0.0;
  bool holds = false;
};

struct MasterBoundReport {
  double constant = 0.0;
  double fraction_holding = 0.0;
  std::vector<MasterBoundRow> rows;
  /// Along the eps rule: log-log slopes of lhs and of the calibrated bound in h.
  std::optional<FitResult> lhs_decay, bound_decay;
};

/// The constant is calibrated at the coarsest point (largest h, then largest eps).
MasterBoundReport master_bound_check(const Simulator& sim, double t, const MasterBoundConfig& cfg,
                                     const QuadratureConfig& quad = {});

nlohmann::json besov_report_json(const BesovReport& r);
nlohmann::json decay_report_json(const DecayReport& r);
nlohmann::json master_bound_json(const MasterBoundReport& r);
void write_decay_csv(std::ostream& out, const DecayReport& r);
void write_besov_csv(std::ostream& out, const BesovReport& r);
void write_density_csv(std::ostream& out, const DensityEstimate& est);

}  // namespace spdens
