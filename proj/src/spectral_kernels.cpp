#include "spdens/spectral_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>

namespace spdens {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

double norm(std::span<const double> xi) {
  double s = 0.0;
  for (double v : xi) s += v * v;
  return std::sqrt(s);
}

std::vector<double> split_numbers(const std::string& text, const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw DomainError("coefficient '" + spec + "': cannot parse number '" + item + "'");
    }
  }
  return out;
}

}  // namespace

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Wave: return "wave";
    case KernelFamily::Heat: return "heat";
    case KernelFamily::Custom: return "custom";
  }
  return "unknown";
}

double sphere_area(int d) {
  if (d < 1) throw DomainError("sphere_area: dimension must be >= 1");
  return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / boost::math::tgamma(0.5 * d);
}

SpectralKernel SpectralKernel::wave() {
  SpectralKernel k;
  k.family_ = KernelFamily::Wave;
  k.sup_sq_ = [](double t) { return t * t; };
  return k;
}

SpectralKernel SpectralKernel::heat() {
  SpectralKernel k;
  k.family_ = KernelFamily::Heat;
  k.sup_sq_ = [](double) { return 1.0; };
  return k;
}

SpectralKernel SpectralKernel::custom(Evaluator eval, std::optional<SupSquared> sup_sq,
                                      std::optional<LengthScale> length_scale) {
  if (!eval) throw DomainError("custom kernel needs a Fourier-space evaluator");
  SpectralKernel k;
  k.family_ = KernelFamily::Custom;
  k.custom_ = std::move(eval);
  k.sup_sq_ = std::move(sup_sq);
  k.length_scale_ = std::move(length_scale);
  return k;
}

double SpectralKernel::radial(double t, double r, int d) const {
  switch (family_) {
    case KernelFamily::Wave:
      // removable singularity: sin(t r)/r -> t
      return r == 0.0 ? t : std::sin(t * r) / r;
    case KernelFamily::Heat:
      return std::exp(-kFourPiSq * t * r * r);
    case KernelFamily::Custom: {
      std::vector<double> xi(static_cast<std::size_t>(std::max(d, 1)), 0.0);
      xi[0] = r;
      return custom_(t, xi);
    }
  }
  return 0.0;
}

double SpectralKernel::operator()(double t, std::span<const double> xi) const {
  if (family_ == KernelFamily::Custom) return custom_(t, xi);
  return radial(t, norm(xi));
}

double SpectralKernel::length_scale(double t) const {
  const double tt = std::max(t, 1e-300);
  switch (family_) {
    case KernelFamily::Wave: return 1.0 / tt;
    case KernelFamily::Heat: return 1.0 / (kTwoPi * std::sqrt(tt));
    case KernelFamily::Custom: return length_scale_ ? (*length_scale_)(t) : 1.0;
  }
  return 1.0;
}

SpectralMeasure SpectralMeasure::riesz(double beta, int d) {
  if (d < 1) throw DomainError("Riesz measure: dimension must be >= 1");
  const double upper = std::min(2.0, static_cast<double>(d));
  if (!(beta > 0.0 && beta < upper)) {
    std::ostringstream msg;
    msg << "Riesz measure: beta = " << beta << " outside (0, min(2, d)) = (0, " << upper << ")";
    throw DomainError(msg.str());
  }
  SpectralMeasure m;
  m.kind_ = MeasureKind::Riesz;
  m.d_ = d;
  m.beta_ = beta;
  m.mass_ = std::numeric_limits<double>::infinity();
  return m;
}

SpectralMeasure SpectralMeasure::atoms(std::vector<Atom> atoms, int d) {
  if (d < 1) throw DomainError("atom measure: dimension must be >= 1");
  if (atoms.empty()) throw DomainError("atom measure: needs at least one atom");
  double mass = 0.0;
  for (const auto& a : atoms) {
    if (static_cast<int>(a.xi.size()) != d)
      throw DomainError("atom measure: atom frequency has wrong dimension");
    if (!(a.mass >= 0.0) || !std::isfinite(a.mass))
      throw DomainError("atom measure: masses must be finite and nonnegative");
    mass += a.mass;
  }
  if (!(mass > 0.0)) throw DomainError("atom measure: total mass must be strictly positive");
  SpectralMeasure m;
  m.kind_ = MeasureKind::FiniteAtoms;
  m.d_ = d;
  m.atoms_ = std::move(atoms);
  m.mass_ = mass;
  return m;
}

SpectralMeasure SpectralMeasure::radial_density(std::function<double(double)> w, int d,
                                                double support) {
  if (d < 1) throw DomainError("radial density: dimension must be >= 1");
  if (!w) throw DomainError("radial density: missing density function");
  if (!(support > 0.0) || !std::isfinite(support))
    throw DomainError("radial density: support radius must be finite and positive");
  SpectralMeasure m;
  m.kind_ = MeasureKind::FiniteRadialDensity;
  m.d_ = d;
  m.density_ = std::move(w);
  m.support_ = support;
  // Midpoint rule on the radial reduction; only used for reporting.
  constexpr int n = 4096;
  const double h = support / n;
  double mass = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = (i + 0.5) * h;
    mass += m.density_(r) * std::pow(r, d - 1) * h;
  }
  m.mass_ = mass * sphere_area(d);
  return m;
}

double SpectralMeasure::beta() const {
  if (kind_ != MeasureKind::Riesz) throw DomainError("beta is only defined for Riesz measures");
  return beta_;
}

double SpectralMeasure::total_mass() const { return mass_; }

Coefficient Coefficient::constant(double c) {
  Coefficient k;
  k.name = "const:" + std::to_string(c);
  k.f = [c](double) { return c; };
  k.lipschitz = 0.0;
  k.inf_abs = std::abs(c);
  k.is_constant = true;
  k.constant_value = c;
  return k;
}

Coefficient Coefficient::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw DomainError("coefficient '" + spec + "': expected '<kind>:<params>'");
  const std::string kind = spec.substr(0, colon);
  const auto p = split_numbers(spec.substr(colon + 1), spec);
  Coefficient k;
  if (kind == "const") {
    if (p.size() != 1) throw DomainError("coefficient '" + spec + "': const takes one value");
    k = constant(p[0]);
  } else if (kind == "affine") {
    if (p.size() != 2) throw DomainError("coefficient '" + spec + "': affine takes a,b");
    const double a = p[0], slope = p[1];
    k.f = [a, slope](double x) { return a + slope * x; };
    k.lipschitz = std::abs(slope);
    k.inf_abs = slope == 0.0 ? std::abs(a) : 0.0;
    k.is_constant = slope == 0.0;
    k.constant_value = a;
  } else if (kind == "sin1p") {
    if (p.empty() || p.size() > 2)
      throw DomainError("coefficient '" + spec + "': sin1p takes c[,a]");
    const double c = p[0];
    const double a = p.size() == 2 ? p[1] : 0.5;
    if (!(std::abs(a) < 1.0))
      throw DomainError("coefficient '" + spec + "': sin1p amplitude a must satisfy |a| < 1");
    k.f = [c, a](double x) { return c * (1.0 + a * std::sin(x)); };
    k.lipschitz = std::abs(c * a);
    k.inf_abs = std::abs(c) * (1.0 - std::abs(a));
    k.is_constant = a == 0.0 || c == 0.0;
    k.constant_value = c;
  } else {
    throw DomainError("coefficient '" + spec + "': unknown kind '" + kind +
                      "' (known: const, affine, sin1p)");
  }
  k.name = spec;
  return k;
}

ModelCheck check_model(const ModelSpec& model, double grid_radius, int grid_points) {
  ModelCheck out;
  out.dimension_consistent = model.measure.dimension() == model.d;
  const double dx = 2.0 * grid_radius / (grid_points - 1);
  double inf_abs = std::numeric_limits<double>::infinity();
  double lip_s = 0.0, lip_b = 0.0;
  double prev_s = model.sigma(-grid_radius), prev_b = model.b(-grid_radius);
  inf_abs = std::abs(prev_s);
  for (int i = 1; i < grid_points; ++i) {
    const double x = -grid_radius + i * dx;
    const double s = model.sigma(x), bb = model.b(x);
    inf_abs = std::min(inf_abs, std::abs(s));
    lip_s = std::max(lip_s, std::abs(s - prev_s) / dx);
    lip_b = std::max(lip_b, std::abs(bb - prev_b) / dx);
    prev_s = s;
    prev_b = bb;
  }
  out.sampled_inf_abs_sigma = inf_abs;
  out.sampled_lipschitz_sigma = lip_s;
  out.sampled_lipschitz_b = lip_b;
  out.sigma0_declaration_valid = inf_abs >= model.sigma0 * (1.0 - 1e-12);
  out.ellipticity_holds = model.sigma0 > 0.0 && out.sigma0_declaration_valid;
  const double slack = 1e-9;
  out.lipschitz_holds = lip_s <= model.lipschitz_sigma * (1.0 + slack) + slack &&
                        lip_b <= model.lipschitz_b * (1.0 + slack) + slack;
  return out;
}

double eval_kernel(const SpectralKernel& kernel, double t, std::span<const double> xi) {
  if (!(t >= 0.0)) throw DomainError("eval_kernel: t must be >= 0");
  return kernel(t, xi);
}

double measure_radial_weight(const SpectralMeasure& measure, double r) {
  if (!(r > 0.0)) throw DomainError("measure_radial_weight: r must be > 0");
  switch (measure.kind()) {
    case MeasureKind::Riesz:
      return std::pow(r, measure.beta() - measure.dimension());
    case MeasureKind::FiniteRadialDensity:
      return r > measure.support() ? 0.0 : measure.density()(r);
    case MeasureKind::FiniteAtoms:
      break;
  }
  throw DomainError("measure_radial_weight: atom measures have no density");
}

KernelSup radial_sup_search(const std::function<double(double)>& f, double lo, double hi,
                            int grid_points) {
  KernelSup best{f(0.0), 0.0, true};
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  const double ratio = std::log(hi / lo) / (grid_points - 1);
  std::size_t best_i = grid.size();
  for (int i = 0; i < grid_points; ++i) {
    grid[static_cast<std::size_t>(i)] = lo * std::exp(ratio * i);
    const double v = f(grid[static_cast<std::size_t>(i)]);
    if (v > best.value) {
      best = {v, grid[static_cast<std::size_t>(i)], true};
      best_i = static_cast<std::size_t>(i);
    }
  }
  if (best_i == grid.size()) return best;
  double a = best_i == 0 ? 0.0 : grid[best_i - 1];
  double b = best_i + 1 < grid.size() ? grid[best_i + 1] : grid[best_i];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 60 && (b - a) > 1e-14 * std::max(1.0, b); ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - inv_phi * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + inv_phi * (b - a); fd = f(d);
    }
  }
  if (fc > best.value) best = {fc, c, true};
  if (fd > best.value) best = {fd, d, true};
  return best;
}

KernelSup sup_kernel_sq(const SpectralKernel& kernel, double t, int d) {
  if (!(t >= 0.0)) throw DomainError("sup_kernel_sq: t must be >= 0");
  if (kernel.sup_sq_closed_form()) return {(*kernel.sup_sq_closed_form())(t), 0.0, false};
  const double scale = kernel.length_scale(t);
  auto f = [&](double r) {
    const double v = kernel.radial(t, r, d);
    return v * v;
  };
  return radial_sup_search(f, 1e-6 * scale, 1e3 * scale);
}

}  // namespace spdens
