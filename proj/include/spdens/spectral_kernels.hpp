#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spdens {

/// Raised when an argument lies outside the mathematical domain of an operation.
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class KernelFamily { Wave, Heat, Custom };

std::string to_string(KernelFamily family);

/// Surface area of the unit sphere S^{d-1} in R^d, 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int d);

/// Fourier transform of a fundamental solution, t -> F Lambda(t)(xi).
///
/// Wave and Heat are closed forms of |xi|; Custom wraps a user evaluator that
/// must itself work in Fourier variables. The verifier and the simulator treat
/// every kernel as isotropic and evaluate Custom kernels along the first axis.
class SpectralKernel {
public:
  using Evaluator = std::function<double(double t, std::span<const double> xi)>;
  using SupSquared = std::function<double(double t)>;
  using LengthScale = std::function<double(double t)>;

  static SpectralKernel wave();
  static SpectralKernel heat();
  /// `length_scale(t)` is the frequency scale over which the kernel varies at
  /// time t (panel width and shift grid units); defaults to 1.
  static SpectralKernel custom(Evaluator eval,
                               std::optional<SupSquared> sup_sq = std::nullopt,
                               std::optional<LengthScale> length_scale = std::nullopt);

  KernelFamily family() const { return family_; }

  double operator()(double t, std::span<const double> xi) const;
  /// Value at |xi| = r in dimension d.
  double radial(double t, double r, int d = 1) const;

  /// Frequency scale of variation at time t (1/t for Wave, 1/(2 pi sqrt t) for Heat).
  double length_scale(double t) const;

  const std::optional<SupSquared>& sup_sq_closed_form() const { return sup_sq_; }

private:
  KernelFamily family_ = KernelFamily::Wave;
  Evaluator custom_;
  std::optional<SupSquared> sup_sq_;
  std::optional<LengthScale> length_scale_;
};

enum class MeasureKind { Riesz, FiniteAtoms, FiniteRadialDensity };

struct Atom {
  std::vector<double> xi;
  double mass = 0.0;
};

/// Spectral measure mu of the spatial noise covariance.
class SpectralMeasure {
public:
  /// mu(dxi) = |xi|^{-d+beta} dxi, 0 < beta < min(2, d).
  static SpectralMeasure riesz(double beta, int d);
  static SpectralMeasure atoms(std::vector<Atom> atoms, int d);
  /// mu(dxi) = w(|xi|) dxi with w vanishing beyond `support` (finite measure).
  static SpectralMeasure radial_density(std::function<double(double)> w, int d,
                                        double support);

  MeasureKind kind() const { return kind_; }
  int dimension() const { return d_; }
  double beta() const;
  const std::vector<Atom>& atom_list() const { return atoms_; }
  const std::function<double(double)>& density() const { return density_; }
  double support() const { return support_; }
  /// Total mass; +inf for Riesz.
  double total_mass() const;

private:
  MeasureKind kind_ = MeasureKind::Riesz;
  int d_ = 1;
  double beta_ = 0.0;
  std::vector<Atom> atoms_;
  std::function<double(double)> density_;
  double support_ = 0.0;
  double mass_ = 0.0;
};

/// Lipschitz coefficient from the named registry:
///   "const:c"        -> c
///   "affine:a,b"     -> a + b x
///   "sin1p:c[,a]"    -> c (1 + a sin x), a in (-1, 1), default a = 1/2
struct Coefficient {
  std::string name;
  std::function<double(double)> f;
  double lipschitz = 0.0;
  /// inf_x |f(x)| in closed form.
  double inf_abs = 0.0;
  bool is_constant = false;
  double constant_value = 0.0;

  double operator()(double x) const { return f(x); }

  static Coefficient parse(const std::string& spec);
  static Coefficient constant(double c);
};

struct ModelSpec {
  SpectralKernel kernel = SpectralKernel::wave();
  SpectralMeasure measure = SpectralMeasure::riesz(1.0, 2);
  int d = 2;
  double T = 1.0;
  Coefficient sigma = Coefficient::constant(1.0);
  Coefficient b = Coefficient::constant(0.0);
  /// Declared ellipticity floor; 0 means no (A5) claim.
  double sigma0 = 0.0;
  double lipschitz_sigma = 0.0;
  double lipschitz_b = 0.0;
};

struct ModelCheck {
  bool dimension_consistent = false;
  bool ellipticity_holds = false;  // sampled inf |sigma| >= sigma0 > 0
  bool sigma0_declaration_valid = false;
  bool lipschitz_holds = false;
  double sampled_inf_abs_sigma = 0.0;
  double sampled_lipschitz_sigma = 0.0;
  double sampled_lipschitz_b = 0.0;
};

/// Sampled checks of the (A5) floor and the declared Lipschitz constants on
/// an equispaced test grid over [-grid_radius, grid_radius].
ModelCheck check_model(const ModelSpec& model, double grid_radius = 20.0,
                       int grid_points = 4001);

double eval_kernel(const SpectralKernel& kernel, double t, std::span<const double> xi);

/// Density of the measure at |xi| = r (Riesz or FiniteRadialDensity).
double measure_radial_weight(const SpectralMeasure& measure, double r);

struct KernelSup {
  double value = 0.0;
  /// Radius |eta| where the supremum is attained (0 for the limit |eta| -> 0).
  double attained_at = 0.0;
  /// True when the value comes from a grid search (a lower estimate).
  bool numeric = false;
};

/// sup over eta of |F Lambda(t)(eta)|^2.
KernelSup sup_kernel_sq(const SpectralKernel& kernel, double t, int d = 1);

/// Numeric supremum of q -> f(q) over {0} and a log grid in [lo, hi] refined by
/// golden-section search around the best grid point.
KernelSup radial_sup_search(const std::function<double(double)>& f, double lo, double hi,
                            int grid_points = 96);

}  // namespace spdens
