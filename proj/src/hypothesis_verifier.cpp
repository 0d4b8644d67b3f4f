#include "spdens/hypothesis_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "spdens/quadrature.hpp"

namespace spdens {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourPiSq = 4.0 * kPi * kPi;

RadialProfile zero_profile() {
  RadialProfile F;
  F.value = [](double) { return 0.0; };
  F.tail.kind = TailModel::Kind::Trig;
  F.tail.power = 2.0;
  return F;
}

RadialProfile heat_like(std::function<double(double)> value, double fast_time, double slow_time) {
  RadialProfile F;
  F.value = std::move(value);
  const double fast = std::sqrt(2.0 * kFourPiSq * fast_time);
  F.panel = 0.5 / fast;
  F.core = 1.0 / fast;
  F.oscillatory = false;
  F.tail.kind = slow_time > 0.0 ? TailModel::Kind::Gaussian : TailModel::Kind::Unknown;
  F.tail.rate = 2.0 * kFourPiSq * slow_time;
  return F;
}

RadialProfile custom_profile(std::function<double(double)> value, double scale, int ppp) {
  RadialProfile F;
  F.value = std::move(value);
  F.panel = scale / ppp;
  F.core = scale;
  F.tail.kind = TailModel::Kind::Unknown;
  return F;
}

void check_time(const ModelSpec& model, double t, const char* what) {
  if (!(t >= 0.0) || t > model.T * (1.0 + 1e-12))
    throw DomainError(std::string(what) + ": t must lie in [0, T]");
}

// Integral over [0, t] of a smooth integrand with oscillation frequency `freq`.
template <class F>
double smooth_time_integral(F&& f, double t, double freq) {
  const int n = std::clamp(static_cast<int>(std::ceil(2.0 * t * freq / kPi)) + 4, 4, 100000);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += quad::gl8(f, t * i / n, t * (i + 1) / n);
  return sum;
}

double atom_time_frequency(const SpectralKernel& k, double r) {
  switch (k.family()) {
    case KernelFamily::Wave: return 2.0 * r;
    case KernelFamily::Heat: return 2.0 * kFourPiSq * r * r;
    case KernelFamily::Custom: return 64.0;
  }
  return 1.0;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Largest |F Lambda(r)(q) - F Lambda(s)(q)|^2 over q >= 0.
double sup_over_frequency(const SpectralKernel& k, const RadialProfile& F, double lo_time, double hi_time) {
  const double lo = 1e-6 * k.length_scale(std::max(hi_time, 1e-300));
  const double hi = 1e3 * k.length_scale(std::max(lo_time, 1e-12 * hi_time));
  return radial_sup_search(F.value, lo, hi, 128).value;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config

void QuadratureConfig::validate() const {
  if (!(radial_cutoff > 0.0)) throw DomainError("quadrature: radial_cutoff must be > 0");
  if (!(tail_tolerance > 0.0)) throw DomainError("quadrature: tail_tolerance must be > 0");
  if (panel_count < 1) throw DomainError("quadrature: panel_count must be >= 1");
  if (sup_subgrid < 1) throw DomainError("quadrature: sup_subgrid must be >= 1");
  if (time_levels < 4) throw DomainError("quadrature: time_levels must be >= 4");
  if (!time_grid.empty()) {
    if (time_grid.size() < 8) throw DomainError("quadrature: time_grid needs at least 8 points");
    for (std::size_t i = 0; i < time_grid.size(); ++i) {
      if (!(time_grid[i] > 0.0)) throw DomainError("quadrature: time_grid must be positive");
      if (i > 0 && !(time_grid[i] > time_grid[i - 1]))
        throw DomainError("quadrature: time_grid must be strictly increasing");
    }
  }
  for (double e : eta_grid)
    if (!(e > 0.0)) throw DomainError("quadrature: eta_grid radii must be > 0");
  if (t0 < 0.0) throw DomainError("quadrature: t0 must be >= 0");
}

RadialQuadOptions QuadratureConfig::radial_options() const {
  RadialQuadOptions o;
  o.radial_cutoff = radial_cutoff;
  o.tail_tolerance = tail_tolerance;
  return o;
}

std::vector<double> QuadratureConfig::times(double T) const {
  if (!time_grid.empty()) return time_grid;
  return quad::geometric_grid(T / 100.0, T, 16);
}

std::vector<double> QuadratureConfig::shifts() const {
  return eta_grid.empty() ? default_eta_grid() : eta_grid;
}

// ---------------------------------------------------------------------------
// Profiles

RadialProfile kernel_sq_profile(const SpectralKernel& k, double s, int d, int ppp) {
  switch (k.family()) {
    case KernelFamily::Wave: {
      if (s == 0.0) return zero_profile();
      RadialProfile F;
      F.value = [s](double q) {
        if (q == 0.0) return s * s;
        const double v = std::sin(s * q) / q;
        return v * v;
      };
      F.panel = kPi / (s * ppp);
      F.core = 1.0 / s;
      F.tail.kind = TailModel::Kind::Trig;
      F.tail.power = 2.0;
      F.tail.c0 = 0.5;
      F.tail.cosines = {{-0.5, 2.0 * s}};
      return F;
    }
    case KernelFamily::Heat: {
      const double a = 2.0 * kFourPiSq * s;
      return heat_like([a](double q) { return std::exp(-a * q * q); }, s, s);
    }
    case KernelFamily::Custom:
      return custom_profile([k, s, d](double q) {
        const double v = k.radial(s, q, d);
        return v * v;
      }, k.length_scale(s), ppp);
  }
  return zero_profile();
}

RadialProfile kernel_diff_profile(const SpectralKernel& k, double a, double b, int d, int ppp) {
  if (a == b) return zero_profile();
  const double hi = std::max(a, b), lo = std::min(a, b);
  switch (k.family()) {
    case KernelFamily::Wave: {
      RadialProfile F;
      // sin(aq) - sin(bq) = 2 cos((a+b)q/2) sin((a-b)q/2)
      F.value = [a, b](double q) {
        if (q == 0.0) return (a - b) * (a - b);
        const double v = 2.0 * std::cos(0.5 * (a + b) * q) * std::sin(0.5 * (a - b) * q) / q;
        return v * v;
      };
      F.panel = kPi / (hi * ppp);
      F.core = 1.0 / hi;
      F.tail.kind = TailModel::Kind::Trig;
      F.tail.power = 2.0;
      F.tail.c0 = 1.0;
      F.tail.cosines = {{-0.5, 2.0 * a}, {-0.5, 2.0 * b}, {-1.0, std::abs(a - b)}, {1.0, a + b}};
      return F;
    }
    case KernelFamily::Heat: {
      const double ca = kFourPiSq * lo, cb = kFourPiSq * (hi - lo);
      // e^{-c lo q^2} (1 - e^{-c (hi-lo) q^2})
      return heat_like([ca, cb](double q) {
        const double q2 = q * q;
        const double v = std::exp(-ca * q2) * -std::expm1(-cb * q2);
        return v * v;
      }, hi, lo);
    }
    case KernelFamily::Custom:
      return custom_profile([k, a, b, d](double q) {
        const double v = k.radial(a, q, d) - k.radial(b, q, d);
        return v * v;
      }, k.length_scale(hi), ppp);
  }
  return zero_profile();
}

RadialProfile kernel_sup_diff_profile(const SpectralKernel& k, double s, double h, int m, int d, int ppp) {
  if (h <= 0.0) return zero_profile();
  switch (k.family()) {
    case KernelFamily::Wave: {
      RadialProfile F;
      F.value = [s, h](double q) {
        if (q == 0.0) return h * h;
        const double A = s * q, B = (s + h) * q;
        const double c = std::sin(A);
        double lo = std::min(c, std::sin(B)), hi = std::max(c, std::sin(B));
        if (B - A >= 2.0 * kPi) {
          lo = -1.0;
          hi = 1.0;
        } else {
          const double k_top = std::ceil((A - 0.5 * kPi) / (2.0 * kPi));
          if (0.5 * kPi + 2.0 * kPi * k_top <= B) hi = 1.0;
          const double k_bot = std::ceil((A - 1.5 * kPi) / (2.0 * kPi));
          if (1.5 * kPi + 2.0 * kPi * k_bot <= B) lo = -1.0;
        }
        const double v = std::max((hi - c) * (hi - c), (lo - c) * (lo - c));
        return v / (q * q);
      };
      F.panel = kPi / ((s + h) * ppp);
      F.core = 1.0 / (s + h);
      F.min_cutoff = 2.0 * kPi / h;
      // beyond 2 pi / h: q^{-2} (1 + |sin sq|)^2 = q^{-2} (3/2 + 2|sin sq| - cos(2sq)/2)
      F.tail.kind = TailModel::Kind::Trig;
      F.tail.power = 2.0;
      F.tail.c0 = 1.5;
      F.tail.cosines = {{-0.5, 2.0 * s}};
      F.tail.abs_sin_coef = 2.0;
      F.tail.abs_sin_freq = s;
      return F;
    }
    case KernelFamily::Heat:
      return kernel_diff_profile(k, s + h, s, d, ppp);
    case KernelFamily::Custom: {
      std::vector<double> r(static_cast<std::size_t>(m));
      for (int j = 1; j <= m; ++j) r[static_cast<std::size_t>(j - 1)] = s + h * j / m;
      return custom_profile([k, s, r, d](double q) {
        const double base = k.radial(s, q, d);
        double best = 0.0;
        for (double rj : r) {
          const double v = k.radial(rj, q, d) - base;
          best = std::max(best, v * v);
        }
        return best;
      }, k.length_scale(s + h), ppp);
    }
  }
  return zero_profile();
}

// ---------------------------------------------------------------------------
// Functionals

FunctionalValue spatial_integral(const ModelSpec& model, const QuadratureConfig& cfg, double s) {
  const auto& mu = model.measure;
  if (mu.kind() == MeasureKind::FiniteAtoms) {
    double sum = 0.0;
    for (const auto& atom : mu.atom_list()) {
      const double v = model.kernel.radial(s, norm(atom.xi), model.d);
      sum += atom.mass * v * v;
    }
    return {sum, false, false};
  }
  const auto F = kernel_sq_profile(model.kernel, s, model.d, cfg.panel_count);
  const auto q = shifted_integral(F, mu, 0.0, cfg.radial_options());
  return {q.value, q.diverged, false};
}

FunctionalValue sup_spatial_integral(const ModelSpec& model, const QuadratureConfig& cfg, double s) {
  const auto F = kernel_sq_profile(model.kernel, s, model.d, cfg.panel_count);
  const auto grid = cfg.shifts();
  const auto sup = sup_over_shift(F, model.measure, model.kernel.length_scale(s), grid, cfg.radial_options());
  return {sup.value, sup.diverged, true};
}

FunctionalValue compute_g(const ModelSpec& model, const QuadratureConfig& cfg, double t) {
  check_time(model, t, "compute_g");
  if (t == 0.0) return {};
  const auto& mu = model.measure;
  if (mu.kind() == MeasureKind::FiniteAtoms) {
    double sum = 0.0;
    for (const auto& atom : mu.atom_list()) {
      const double r = norm(atom.xi);
      auto f = [&](double s) {
        const double v = model.kernel.radial(s, r, model.d);
        return v * v;
      };
      sum += atom.mass * smooth_time_integral(f, t, atom_time_frequency(model.kernel, r));
    }
    return {sum, false, false};
  }
  bool diverged = false;
  auto G = [&](double s) {
    const auto v = spatial_integral(model, cfg, s);
    diverged = diverged || v.diverged;
    return v.value;
  };
  const double value = quad::integrate_graded(G, t, cfg.time_levels);
  return {diverged ? std::numeric_limits<double>::infinity() : value, diverged, false};
}

FunctionalValue compute_g1(const ModelSpec& model, const QuadratureConfig& cfg, double t) {
  check_time(model, t, "compute_g1");
  if (t == 0.0) return {};
  bool diverged = false;
  auto G = [&](double s) {
    const auto v = sup_spatial_integral(model, cfg, s);
    diverged = diverged || v.diverged;
    return v.value;
  };
  const double value = quad::integrate_graded(G, t, cfg.time_levels);
  return {diverged ? std::numeric_limits<double>::infinity() : value, diverged, true};
}

FunctionalValue compute_g2(const ModelSpec& model, const QuadratureConfig& cfg, double t) {
  check_time(model, t, "compute_g2");
  if (t == 0.0) return {};
  switch (model.kernel.family()) {
    case KernelFamily::Wave: return {t * t * t / 3.0, false, false};
    case KernelFamily::Heat: return {t, false, false};
    case KernelFamily::Custom: break;
  }
  const bool numeric = !model.kernel.sup_sq_closed_form().has_value();
  auto G = [&](double s) { return sup_kernel_sq(model.kernel, s, model.d).value; };
  return {quad::integrate_graded(G, t, cfg.time_levels), false, numeric};
}

FunctionalTable compute_functionals(const ModelSpec& model, const QuadratureConfig& cfg,
                                    std::span<const double> times) {
  FunctionalTable out;
  out.t.assign(times.begin(), times.end());
  if (times.empty()) return out;
  check_time(model, times.back(), "compute_functionals");

  bool diverged = false;
  if (model.measure.kind() == MeasureKind::FiniteAtoms) {
    for (double t : times) out.g.push_back(compute_g(model, cfg, t).value);
  } else {
    auto G = [&](double s) {
      const auto v = spatial_integral(model, cfg, s);
      diverged = diverged || v.diverged;
      return v.value;
    };
    out.g = quad::integrate_cumulative(G, times, cfg.time_levels);
  }
  auto G1 = [&](double s) {
    const auto v = sup_spatial_integral(model, cfg, s);
    diverged = diverged || v.diverged;
    return v.value;
  };
  out.g1 = quad::integrate_cumulative(G1, times, cfg.time_levels);
  out.numeric_sup = true;
  for (double t : times) {
    const auto v = compute_g2(model, cfg, t);
    out.g2.push_back(v.value);
  }
  out.diverged = diverged;
  if (diverged) {
    std::fill(out.g.begin(), out.g.end(), std::numeric_limits<double>::infinity());
    std::fill(out.g1.begin(), out.g1.end(), std::numeric_limits<double>::infinity());
  }
  return out;
}

Increments compute_increments(const ModelSpec& model, const QuadratureConfig& cfg, double s, double t) {
  if (!(s >= 0.0) || !(t >= s) || t > model.T * (1.0 + 1e-12))
    throw DomainError("compute_increments: need 0 <= s <= t <= T");
  Increments out;
  const double tau = t - s;
  if (tau == 0.0) return out;
  const auto& k = model.kernel;
  const auto grid = cfg.shifts();
  const auto opt = cfg.radial_options();
  bool diverged = false;

  if (s > 0.0) {
    // I1: u = s - r runs over (0, s); the pair of times is (u + tau, u)
    auto G1 = [&](double u) {
      const auto F = kernel_diff_profile(k, u + tau, u, model.d, cfg.panel_count);
      const auto sup = sup_over_shift(F, model.measure, k.length_scale(u + tau), grid, opt);
      diverged = diverged || sup.diverged;
      return sup.value;
    };
    out.I1 = quad::integrate_graded(G1, s, cfg.time_levels);
    auto G3 = [&](double u) {
      const auto F = kernel_diff_profile(k, u + tau, u, model.d, cfg.panel_count);
      return sup_over_frequency(k, F, u, u + tau);
    };
    out.I3 = quad::integrate_graded(G3, s, cfg.time_levels);
  }
  const auto g1 = [&] {
    ModelSpec shifted = model;
    shifted.T = std::max(model.T, tau);
    return compute_g1(shifted, cfg, tau);
  }();
  out.I2 = g1.value;
  diverged = diverged || g1.diverged;
  ModelSpec shifted = model;
  shifted.T = std::max(model.T, tau);
  out.I4 = compute_g2(shifted, cfg, tau).value;
  out.diverged = diverged;
  if (diverged) out.I1 = out.I2 = std::numeric_limits<double>::infinity();
  return out;
}

A1Report check_A1(const ModelSpec& model, const QuadratureConfig& cfg) {
  A1Report out;
  const auto g1 = compute_g1(model, cfg, model.T);
  const auto g2 = compute_g2(model, cfg, model.T);
  out.values = {g1.value, g2.value};
  out.finite = !g1.diverged && !g2.diverged && std::isfinite(g1.value) && std::isfinite(g2.value);
  return out;
}

A3Report check_A3(const ModelSpec& model, const QuadratureConfig& cfg, std::span<const double> h_grid) {
  A3Report out;
  for (std::size_t i = 0; i < h_grid.size(); ++i) {
    if (!(h_grid[i] > 0.0)) throw DomainError("check_A3: h values must be > 0");
    if (i > 0 && !(h_grid[i] < h_grid[i - 1])) throw DomainError("check_A3: h_grid must decrease");
  }
  const auto& k = model.kernel;
  const auto grid = cfg.shifts();
  const auto opt = cfg.radial_options();
  for (double h : h_grid) {
    bool diverged = false;
    auto V1 = [&](double s) {
      const auto F = kernel_sup_diff_profile(k, s, h, cfg.sup_subgrid, model.d, cfg.panel_count);
      const auto sup = sup_over_shift(F, model.measure, k.length_scale(s + h), grid, opt);
      diverged = diverged || sup.diverged;
      return sup.value;
    };
    auto V2 = [&](double s) {
      const auto F = kernel_sup_diff_profile(k, s, h, cfg.sup_subgrid, model.d, cfg.panel_count);
      return sup_over_frequency(k, F, s, s + h);
    };
    A3Row row;
    row.h = h;
    row.value1 = quad::integrate_graded(V1, model.T, cfg.time_levels);
    row.value2 = quad::integrate_graded(V2, model.T, cfg.time_levels);
    if (diverged) {
      row.value1 = std::numeric_limits<double>::infinity();
      out.diverged = true;
    }
    out.limits.push_back(row);
  }
  out.monotone = true;
  for (std::size_t i = 1; i < out.limits.size(); ++i) {
    const auto& a = out.limits[i - 1];
    const auto& b = out.limits[i];
    if (b.value1 > a.value1 * (1.0 + 1e-9) || b.value2 > a.value2 * (1.0 + 1e-9)) out.monotone = false;
  }
  if (out.limits.size() >= 2) {
    const auto& first = out.limits.front();
    const auto& last = out.limits.back();
    const double lh = std::log(first.h / last.h);
    auto slope = [&](double a, double b) {
      if (a <= 0.0 && b <= 0.0) return 0.0;
      if (b <= 0.0) return std::numeric_limits<double>::infinity();
      return std::log(a / b) / lh;
    };
    out.slope1 = slope(first.value1, last.value1);
    out.slope2 = slope(first.value2, last.value2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exponent algebra

Rational to_rational(double x) {
  if (!std::isfinite(x)) throw DomainError("to_rational: value must be finite");
  for (long long den = 1; den <= (1LL << 20); den *= 2) {
    const double num = x * static_cast<double>(den);
    if (num == std::floor(num) && std::abs(num) < 9e15) return Rational(static_cast<long long>(num), den);
  }
  // continued fraction
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int i = 0; i < 64; ++i) {
    const double a = std::floor(r);
    const long long ai = static_cast<long long>(a);
    const long long h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > 1000000) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - x) < 1e-15 * std::max(1.0, std::abs(x))) break;
    const double frac = r - a;
    if (frac == 0.0) break;
    r = 1.0 / frac;
  }
  return Rational(h1, k1);
}

double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

std::string to_string(const Rational& r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << '/' << r.denominator();
  return os.str();
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Analytic: return "analytic";
    case Provenance::Fitted: return "fitted";
    case Provenance::Missing: return "missing";
  }
  return "missing";
}

ExactExponents exponent_algebra(Rational delta, Rational gamma, Rational gamma1, Rational gamma2) {
  if (gamma <= Rational(0)) throw DomainError("exponent algebra: gamma must be > 0");
  ExactExponents e{delta, gamma, gamma1, gamma2, Rational(0), Rational(0)};
  e.gamma_bar = (std::min(gamma1, gamma2) + delta) / gamma;
  e.s_max = Rational(1) - Rational(1) / e.gamma_bar;
  return e;
}

bool ExponentReport::complete() const {
  return prov_delta != Provenance::Missing && prov_gamma != Provenance::Missing &&
         prov_gamma1 != Provenance::Missing && prov_gamma2 != Provenance::Missing;
}

void ExponentReport::finalize() {
  if (!complete() || !(gamma > 0.0)) {
    gamma_bar = s_max = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  gamma_bar = (std::min(gamma1, gamma2) + delta) / gamma;
  s_max = 1.0 - 1.0 / gamma_bar;
}

std::string to_string(const ExponentFamily& f) {
  switch (f.kind) {
    case ExponentFamily::Kind::WaveRiesz: return "WaveRiesz(beta=" + to_string(f.beta) + ")";
    case ExponentFamily::Kind::WaveFinite: return "WaveFinite";
    case ExponentFamily::Kind::HeatRiesz: return "HeatRiesz(beta=" + to_string(f.beta) + ")";
    case ExponentFamily::Kind::HeatFinite: return "HeatFinite";
  }
  return "unknown";
}

namespace {

void check_beta(const ExponentFamily& f) {
  const Rational upper = f.d > 0 ? std::min(Rational(2), Rational(f.d)) : Rational(2);
  if (!(f.beta > Rational(0) && f.beta < upper))
    throw DomainError("exponent family " + to_string(f) + ": beta must lie in (0, " + to_string(upper) + ")");
}

}  // namespace

Rational closed_form_s_max(const ExponentFamily& f) {
  switch (f.kind) {
    case ExponentFamily::Kind::WaveRiesz:
      check_beta(f);
      return (Rational(2) - f.beta) / (Rational(5) - Rational(2) * f.beta);
    case ExponentFamily::Kind::WaveFinite: return Rational(2, 5);
    case ExponentFamily::Kind::HeatRiesz:
      check_beta(f);
      return Rational(1, 2);
    case ExponentFamily::Kind::HeatFinite: return Rational(1, 2);
  }
  return Rational(0);
}

ExponentReport analytic_exponents(const ExponentFamily& f) {
  ExactExponents e;
  switch (f.kind) {
    case ExponentFamily::Kind::WaveRiesz:
      check_beta(f);
      e = exponent_algebra(Rational(2) - f.beta, Rational(3) - f.beta, Rational(3) - f.beta, Rational(3));
      break;
    case ExponentFamily::Kind::WaveFinite:
      e = exponent_algebra(Rational(2), Rational(3), Rational(3), Rational(3));
      break;
    case ExponentFamily::Kind::HeatRiesz: {
      check_beta(f);
      const Rational x = Rational(1) - f.beta / Rational(2);
      e = exponent_algebra(x, x, x, Rational(1));
      break;
    }
    case ExponentFamily::Kind::HeatFinite:
      e = exponent_algebra(Rational(1), Rational(1), Rational(1), Rational(1));
      break;
  }
  if (e.s_max != closed_form_s_max(f))
    throw std::logic_error("exponent algebra disagrees with the closed form for " + to_string(f));
  ExponentReport r;
  r.delta = to_double(e.delta);
  r.gamma = to_double(e.gamma);
  r.gamma1 = to_double(e.gamma1);
  r.gamma2 = to_double(e.gamma2);
  r.prov_delta = r.prov_gamma = r.prov_gamma1 = r.prov_gamma2 = Provenance::Analytic;
  r.exact = e;
  r.finalize();
  return r;
}

std::optional<ExponentFamily> family_of(const ModelSpec& model) {
  const bool wave = model.kernel.family() == KernelFamily::Wave;
  const bool heat = model.kernel.family() == KernelFamily::Heat;
  if (!wave && !heat) return std::nullopt;
  if (model.measure.kind() == MeasureKind::Riesz) {
    const Rational beta = to_rational(model.measure.beta());
    return wave ? ExponentFamily::wave_riesz(beta, model.d) : ExponentFamily::heat_riesz(beta, model.d);
  }
  return wave ? ExponentFamily::wave_finite() : ExponentFamily::heat_finite();
}

FitResult fit_exponent(std::span<const std::pair<double, double>> points) {
  if (points.size() < 8) throw DomainError("fit_exponent: needs at least 8 points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [t, v] : points) {
    if (!(t > 0.0) || !(v > 0.0) || !std::isfinite(t) || !std::isfinite(v))
      throw DomainError("fit_exponent: points must be finite and strictly positive");
    sx += std::log(t);
    sy += std::log(v);
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [t, v] : points) {
    const double dx = std::log(t) - mx, dy = std::log(v) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw DomainError("fit_exponent: t values must not all coincide");
  FitResult f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

ExponentReport fitted_exponents(const FunctionalTable& table, double t0, std::optional<FitResult> delta_fit) {
  ExponentReport r;
  const std::size_t n = table.t.size();
  auto points = [&](const std::vector<double>& v, std::size_t count) {
    std::vector<std::pair<double, double>> p;
    for (std::size_t i = 0; i < count; ++i) p.emplace_back(table.t[i], v[i]);
    return p;
  };
  // smallest-t half, restricted to t <= t0 when that still leaves 8 points
  std::size_t small = std::max<std::size_t>(8, n / 2);
  std::size_t below = 0;
  while (below < n && table.t[below] <= t0 * (1.0 + 1e-12)) ++below;
  if (below >= 8) small = std::min(small, below);
  small = std::min(small, n);

  const auto fg = fit_exponent(points(table.g, small));
  const auto fg1 = fit_exponent(points(table.g1, n));
  const auto fg2 = fit_exponent(points(table.g2, n));
  r.gamma = fg.slope;
  r.gamma1 = fg1.slope;
  r.gamma2 = fg2.slope;
  r.prov_gamma = r.prov_gamma1 = r.prov_gamma2 = Provenance::Fitted;
  r.fit_diagnostics["gamma"] = fg;
  r.fit_diagnostics["gamma1"] = fg1;
  r.fit_diagnostics["gamma2"] = fg2;
  if (delta_fit) {
    r.delta = delta_fit->slope;
    r.prov_delta = Provenance::Fitted;
    r.fit_diagnostics["delta"] = *delta_fit;
  }
  r.finalize();
  return r;
}

double OptimalParameters::epsilon(double t, double h) const {
  return 0.5 * t * std::pow(std::abs(h), rho / gamma);
}

OptimalParameters optimal_parameters(const ExponentReport& report) {
  if (!(report.gamma_bar > 1.0))
    throw DomainError("optimal_parameters: gamma_bar must exceed 1 (got " + std::to_string(report.gamma_bar) + ")");
  OptimalParameters p;
  p.alpha = 1.0 / report.gamma_bar;
  p.rho = 2.0;
  p.gamma = report.gamma;
  if (report.exact) {
    if (report.exact->gamma_bar <= Rational(1)) throw DomainError("optimal_parameters: gamma_bar must exceed 1");
    p.exact_alpha = Rational(1) / report.exact->gamma_bar;
    p.boundary_product = to_double(*p.exact_alpha * Rational(2) * report.exact->gamma_bar / Rational(2));
  } else {
    p.boundary_product = p.alpha * p.rho * report.gamma_bar / 2.0;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Output

std::string exponent_report_json(const ExponentReport& r, int indent) {
  using nlohmann::json;
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["delta"] = num(r.delta);
  j["gamma"] = num(r.gamma);
  j["gamma1"] = num(r.gamma1);
  j["gamma2"] = num(r.gamma2);
  j["gamma_bar"] = num(r.gamma_bar);
  j["s_max"] = num(r.s_max);
  j["provenance"] = {{"delta", to_string(r.prov_delta)},
                     {"gamma", to_string(r.prov_gamma)},
                     {"gamma1", to_string(r.prov_gamma1)},
                     {"gamma2", to_string(r.prov_gamma2)}};
  if (r.exact) {
    j["exact"] = {{"delta", to_string(r.exact->delta)},         {"gamma", to_string(r.exact->gamma)},
                  {"gamma1", to_string(r.exact->gamma1)},       {"gamma2", to_string(r.exact->gamma2)},
                  {"gamma_bar", to_string(r.exact->gamma_bar)}, {"s_max", to_string(r.exact->s_max)}};
  }
  json fits = json::object();
  for (const auto& [name, f] : r.fit_diagnostics)
    fits[name] = {{"slope", num(f.slope)}, {"intercept", num(f.intercept)}, {"r2", num(f.r2)}};
  j["fit_diagnostics"] = fits;
  return j.dump(indent);
}

void write_functionals_csv(std::ostream& os, const FunctionalTable& table, std::span<const IncrementRow> inc) {
  os << "t,g,g1,g2,tau,I1,I2,I3,I4\n";
  os << std::setprecision(17);
  for (std::size_t i = 0; i < table.t.size(); ++i) {
    os << table.t[i] << ',' << table.g[i] << ',' << table.g1[i] << ',' << table.g2[i];
    if (i < inc.size()) {
      const auto& v = inc[i].values;
      os << ',' << inc[i].tau << ',' << v.I1 << ',' << v.I2 << ',' << v.I3 << ',' << v.I4;
    } else {
      os << ",,,,,";
    }
    os << '\n';
  }
}

}  // namespace spdens
