#include "spdens/radial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_hyperg.h>

#include "spdens/quadrature.hpp"

namespace spdens {

namespace {

constexpr double kPi = std::numbers::pi;

// ∫_y^∞ cos x x^{-nu} dx by repeated integration by parts, valid for large y.
double cos_tail_asymptotic(double y, double nu, int depth = 4) {
  if (depth == 0) return 0.0;
  const double s = std::sin(y), c = std::cos(y);
  return -s * std::pow(y, -nu) + nu * c * std::pow(y, -nu - 1.0) -
         nu * (nu + 1.0) * cos_tail_asymptotic(y, nu + 2.0, depth - 1);
}

double cos_tail(double y, double nu) {
  constexpr double kFar = 64.0;
  if (y >= kFar) return cos_tail_asymptotic(y, nu);
  auto f = [nu](double x) { return std::cos(x) * std::pow(x, -nu); };
  double sum = 0.0;
  double x = y;
  while (x < kFar) {
    const double w = std::min(0.5 * kPi, 0.5 * x);
    const double nx = std::min(kFar, x + w);
    sum += quad::gl8(f, x, nx);
    x = nx;
  }
  return sum + cos_tail_asymptotic(kFar, nu);
}

template <class G, class W>
double integrate_range(G&& g, double a, double b, W&& width, bool sing_a, bool sing_b, double p) {
  if (!(b > a)) return 0.0;
  std::vector<double> knots{a};
  double x = a;
  while (x < b) {
    const double w = width(x);
    double nx = x + w;
    if (nx >= b - 0.25 * w) nx = b;
    knots.push_back(nx);
    x = nx;
  }
  double sum = 0.0;
  const std::size_t n = knots.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = knots[i], hi = knots[i + 1];
    const bool sl = sing_a && i == 0, sr = sing_b && i + 1 == n;
    if (sl && sr) {
      const double mid = 0.5 * (lo + hi);
      sum += quad::integrate_singular_endpoint(g, lo, mid - lo, p) +
             quad::integrate_singular_endpoint(g, hi, mid - hi, p);
    } else if (sl) {
      sum += quad::integrate_singular_endpoint(g, lo, hi - lo, p);
    } else if (sr) {
      sum += quad::integrate_singular_endpoint(g, hi, lo - hi, p);
    } else {
      sum += quad::gl8(g, lo, hi);
    }
  }
  return sum;
}

struct TailEstimate {
  double value = 0.0;
  double bound = 0.0;
  bool needs_doubling = false;  // Empirical / Unknown: judged by cutoff doubling
  bool diverged = false;
};

// Contribution of rho >= R for a Riesz weight whose spherical mean around a
// shift of length e expands as omega rho^{beta-1} (1 + kappa x^2 + kappa2 x^4 + ...).
TailEstimate riesz_tail(const RadialProfile& F, double beta, int d, double e, double R) {
  TailEstimate out;
  const double omega = sphere_area(d);
  const double a = 0.5 * (d - beta), b = 1.0 - 0.5 * beta, c = 0.5 * d;
  const double kappa = a * b / c;
  const double kappa2 = std::abs(a * (a + 1.0) * b * (b + 1.0) / (2.0 * c * (c + 1.0)));
  const double x = e / R;
  const TailModel& t = F.tail;
  switch (t.kind) {
    case TailModel::Kind::Trig: {
      const double m = t.power + 1.0 - beta;
      if (!(m > 1.0)) {
        out.diverged = true;
        return out;
      }
      double value = 0.0, magnitude = 0.0;
      auto add = [&](double coef, double freq) {
        value += coef * (cos_power_tail(freq, R, m) + kappa * e * e * cos_power_tail(freq, R, m + 2.0));
        magnitude += std::abs(coef);
      };
      add(t.c0, 0.0);
      for (const auto& [coef, freq] : t.cosines) add(coef, freq);
      double remainder = 0.0;
      if (t.abs_sin_coef != 0.0 && t.abs_sin_freq > 0.0) {
        // |sin x| = 2/pi - (4/pi) sum_k cos(2kx)/(4k^2-1), truncated adaptively
        const double sR = t.abs_sin_freq * R;
        const int K = std::clamp(static_cast<int>(std::ceil(30.0 / std::sqrt(sR))), 8, 256);
        add(t.abs_sin_coef * 2.0 / kPi, 0.0);
        for (int k = 1; k <= K; ++k)
          add(-t.abs_sin_coef * 4.0 / kPi / (4.0 * k * k - 1.0), 2.0 * k * t.abs_sin_freq);
        remainder = std::abs(t.abs_sin_coef) * 4.0 / kPi / t.abs_sin_freq / (8.0 * K * K) *
                    2.0 * std::pow(R, -m) * (1.0 + std::abs(kappa) * x * x);
      }
      out.value = omega * value;
      out.bound = omega * magnitude * std::pow(R, 1.0 - m) / (m - 1.0) * kappa2 * std::pow(x, 4) /
                      (1.0 - x * x) +
                  omega * remainder;
      return out;
    }
    case TailModel::Kind::Gaussian: {
      const double geom = std::pow(R / (R - e), d - beta);
      out.bound = omega * t.amp * geom * std::pow(R, beta - 2.0) * std::exp(-t.rate * R * R) /
                  (2.0 * t.rate);
      return out;
    }
    case TailModel::Kind::Empirical: {
      const double m = t.power + 1.0 - beta;
      if (!(m > 1.0)) {
        out.diverged = true;
        return out;
      }
      constexpr int samples = 256;
      double mean = 0.0;
      for (int i = 0; i < samples; ++i) {
        const double q = R * (0.5 + 0.5 * (i + 0.5) / samples);
        mean += std::pow(q, t.power) * F.value(q);
      }
      mean /= samples;
      out.value = omega * mean * (cos_power_tail(0.0, R, m) + kappa * e * e * cos_power_tail(0.0, R, m + 2.0));
      out.needs_doubling = true;
      return out;
    }
    case TailModel::Kind::Unknown:
      out.needs_doubling = true;
      return out;
  }
  return out;
}

QuadValue riesz_spherical_route(const RadialProfile& F, double beta, int d, double e,
                                const RadialQuadOptions& opt) {
  const double omega = sphere_area(d);
  auto g = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    const double f = F.value(rho);
    if (f == 0.0) return 0.0;
    if (e == 0.0) return f * omega * std::pow(rho, beta - 1.0);
    return f * std::pow(rho, d - 1) * riesz_spherical_mean(rho, e, beta, d);
  };
  auto width = [&](double x) {
    double w = x < e ? std::min(F.panel, e) : std::min(F.panel, std::max(x - e, e > 0.0 ? e : F.panel));
    if (!F.oscillatory) w = std::max(w, 0.25 * x);
    return w;
  };
  const double p = beta - 1.0;

  double R;
  if (F.tail.kind == TailModel::Kind::Gaussian && F.tail.rate > 0.0)
    R = e + std::sqrt(36.0 / F.tail.rate);
  else
    R = e + std::max(opt.radial_cutoff * F.core, F.min_cutoff);

  double core = 0.0;
  if (e > 0.0) core += integrate_range(g, 0.0, e, width, false, true, p);
  core += integrate_range(g, e, R, width, true, false, p);

  QuadValue out;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k <= opt.max_doublings; ++k) {
    const TailEstimate tail = riesz_tail(F, beta, d, e, R);
    out.value = core + tail.value;
    out.tail = tail.value;
    out.cutoff = R;
    if (tail.diverged) {
      out.diverged = true;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
    if (!tail.needs_doubling) {
      out.error_bound = tail.bound;
      if (tail.bound <= opt.tail_tolerance * std::abs(out.value) || tail.bound == 0.0) return out;
    } else if (!std::isnan(previous)) {
      out.error_bound = std::abs(out.value - previous);
      if (out.error_bound <= opt.tail_tolerance * std::abs(out.value)) return out;
    }
    previous = out.value;
    const double next = e + 2.0 * (R - e);
    core += integrate_range(g, R, next, width, false, false, p);
    R = next;
  }
  out.diverged = true;
  return out;
}

double angular_average(const RadialProfile& F, int d, double r, double e) {
  if (d == 1) return F.value(std::abs(r - e)) + F.value(r + e);
  if (e == 0.0 || r == 0.0) return sphere_area(d) * F.value(r + e);
  const double omega = sphere_area(d - 1);
  auto h = [&](double theta) {
    const double q2 = r * r + e * e + 2.0 * r * e * std::cos(theta);
    const double s = d == 2 ? 1.0 : std::pow(std::sin(theta), d - 2);
    return F.value(std::sqrt(std::max(q2, 0.0))) * s;
  };
  const int n = std::max(2, static_cast<int>(std::ceil(2.0 * std::min(r, e) / F.panel)) + 1);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += quad::gl8(h, kPi * i / n, kPi * (i + 1) / n);
  return omega * sum;
}

QuadValue radial_density_route(const RadialProfile& F, const SpectralMeasure& mu, double e) {
  const int d = mu.dimension();
  const double S = mu.support();
  auto g = [&](double r) {
    const double w = mu.density()(r);
    if (w == 0.0) return 0.0;
    return w * std::pow(r, d - 1) * angular_average(F, d, r, e);
  };
  const double panel = std::min(F.panel, S / 32.0);
  QuadValue out;
  out.value = integrate_range(g, 0.0, S, [&](double) { return panel; }, false, false, 0.0);
  out.cutoff = S;
  return out;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double cos_power_tail(double f, double R, double m) {
  if (f == 0.0) return std::pow(R, 1.0 - m) / (m - 1.0);
  return std::pow(f, m - 1.0) * cos_tail(f * R, m);
}

double riesz_spherical_mean(double rho, double e, double beta, int d) {
  const double omega = sphere_area(d);
  if (e == 0.0) return omega * std::pow(rho, beta - d);
  if (rho == 0.0) return omega * std::pow(e, beta - d);
  if (d == 1) return std::pow(std::abs(rho - e), beta - 1.0) + std::pow(rho + e, beta - 1.0);
  const double hi = std::max(rho, e), lo = std::min(rho, e);
  const double x = lo / hi, z = x * x;
  if (x == 1.0) return beta > 1.0 ? omega * std::pow(hi, beta - d) * std::tgamma(0.5 * d) *
                                        std::tgamma(beta - 1.0) /
                                        (std::tgamma(0.5 * beta) * std::tgamma(0.5 * (d + beta) - 1.0))
                                  : std::numeric_limits<double>::infinity();
  const double a = 0.5 * (d - beta), b = 1.0 - 0.5 * beta, c = 0.5 * d;
  double F21;
  if (x < 1e-3) {
    F21 = 1.0 + a * b / c * z + a * (a + 1.0) * b * (b + 1.0) / (2.0 * c * (c + 1.0)) * z * z;
  } else if (d == 3) {
    const double u = hi + lo, v = hi - lo;
    const double bracket = beta == 1.0 ? std::log(u / v)
                                       : (std::pow(u, beta - 1.0) - std::pow(v, beta - 1.0)) / (beta - 1.0);
    return 2.0 * kPi / (rho * e) * bracket;
  } else {
    gsl_sf_result res;
    static const bool quiet = [] {
      gsl_set_error_handler_off();
      return true;
    }();
    (void)quiet;
    const int status = gsl_sf_hyperg_2F1_e(a, b, c, z, &res);
    if (status != GSL_SUCCESS) return std::numeric_limits<double>::quiet_NaN();
    F21 = res.val;
  }
  return omega * std::pow(hi, beta - d) * F21;
}

double atom_sum(const RadialProfile& F, const SpectralMeasure& mu, std::span<const double> eta) {
  double sum = 0.0;
  std::vector<double> v(static_cast<std::size_t>(mu.dimension()));
  for (const auto& atom : mu.atom_list()) {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = atom.xi[k] + (k < eta.size() ? eta[k] : 0.0);
    sum += atom.mass * F.value(norm(v));
  }
  return sum;
}

QuadValue shifted_integral(const RadialProfile& F, const SpectralMeasure& mu, double e,
                           const RadialQuadOptions& opt) {
  if (!(e >= 0.0)) throw DomainError("shifted_integral: shift length must be >= 0");
  switch (mu.kind()) {
    case MeasureKind::Riesz:
      return riesz_spherical_route(F, mu.beta(), mu.dimension(), e, opt);
    case MeasureKind::FiniteRadialDensity:
      return radial_density_route(F, mu, e);
    case MeasureKind::FiniteAtoms: {
      std::vector<double> eta(static_cast<std::size_t>(mu.dimension()), 0.0);
      eta[0] = e;
      QuadValue out;
      out.value = atom_sum(F, mu, eta);
      return out;
    }
  }
  return {};
}

QuadValue shifted_integral_angular(const RadialProfile& F, const SpectralMeasure& mu, double e,
                                   const RadialQuadOptions& opt) {
  if (mu.kind() != MeasureKind::Riesz) return shifted_integral(F, mu, e, opt);
  const double beta = mu.beta();
  const int d = mu.dimension();
  auto g = [&](double r) {
    if (r <= 0.0) return 0.0;
    return std::pow(r, beta - 1.0) * angular_average(F, d, r, e);
  };
  auto width = [&](double x) { return F.oscillatory ? F.panel : std::max(F.panel, 0.25 * x); };
  double R = F.tail.kind == TailModel::Kind::Gaussian && F.tail.rate > 0.0
                 ? e + std::sqrt(36.0 / F.tail.rate)
                 : e + std::max(opt.radial_cutoff * F.core, F.min_cutoff);
  double core = integrate_range(g, 0.0, R, width, true, false, beta - 1.0);
  QuadValue out;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k <= opt.max_doublings; ++k) {
    // The tail is modelled as if unshifted; the shift enters the bound at first order.
    const TailEstimate tail = riesz_tail(F, beta, d, 0.0, R);
    out.value = core + tail.value;
    out.tail = tail.value;
    out.cutoff = R;
    if (tail.diverged) {
      out.diverged = true;
      out.value = std::numeric_limits<double>::infinity();
      return out;
    }
    if (!tail.needs_doubling) {
      out.error_bound = tail.bound + std::abs(tail.value) * std::min(1.0, 4.0 * e / R);
      if (out.error_bound <= opt.tail_tolerance * std::abs(out.value) || out.error_bound == 0.0) return out;
    } else if (!std::isnan(previous)) {
      out.error_bound = std::abs(out.value - previous);
      if (out.error_bound <= opt.tail_tolerance * std::abs(out.value)) return out;
    }
    previous = out.value;
    const double next = 2.0 * R;
    core += integrate_range(g, R, next, width, false, false, 0.0);
    R = next;
  }
  out.diverged = true;
  return out;
}

std::vector<double> default_eta_grid() { return quad::geometric_grid(0.05, 20.0, 10); }

ShiftSup sup_over_shift(const RadialProfile& F, const SpectralMeasure& mu, double unit,
                        std::span<const double> eta_grid, const RadialQuadOptions& opt) {
  ShiftSup best;
  if (mu.kind() == MeasureKind::FiniteAtoms) {
    const auto d = static_cast<std::size_t>(mu.dimension());
    std::vector<std::vector<double>> bases{std::vector<double>(d, 0.0)};
    for (const auto& atom : mu.atom_list()) {
      std::vector<double> b(d);
      for (std::size_t k = 0; k < d; ++k) b[k] = -atom.xi[k];
      bases.push_back(std::move(b));
    }
    best.value = -std::numeric_limits<double>::infinity();
    std::vector<double> eta(d), best_eta(d, 0.0);
    auto consider = [&](const std::vector<double>& v) {
      const double val = atom_sum(F, mu, v);
      if (val > best.value) {
        best.value = val;
        best.shift = norm(v);
        best_eta = v;
      }
    };
    for (const auto& base : bases) {
      consider(base);
      for (std::size_t axis = 0; axis < d; ++axis)
        for (double sign : {-1.0, 1.0})
          for (double g : eta_grid) {
            eta = base;
            eta[axis] += sign * unit * g;
            consider(eta);
          }
    }
    // compass search around the best candidate
    double step = 0.5 * unit;
    while (step > 1e-9 * unit) {
      bool moved = false;
      for (std::size_t axis = 0; axis < d; ++axis)
        for (double sign : {-1.0, 1.0}) {
          eta = best_eta;
          eta[axis] += sign * step;
          const double before = best.value;
          consider(eta);
          moved = moved || best.value > before;
        }
      if (!moved) step *= 0.5;
    }
    return best;
  }

  std::vector<double> radii{0.0};
  for (double g : eta_grid)
    if (g > 0.0) radii.push_back(unit * g);
  std::sort(radii.begin(), radii.end());
  std::vector<double> values(radii.size());
  std::size_t arg = 0;
  auto eval = [&](double e) {
    const QuadValue q = shifted_integral(F, mu, e, opt);
    if (q.diverged) best.diverged = true;
    best.error_bound = std::max(best.error_bound, q.error_bound);
    return q.value;
  };
  for (std::size_t i = 0; i < radii.size(); ++i) {
    values[i] = eval(radii[i]);
    if (best.diverged) {
      best.value = std::numeric_limits<double>::infinity();
      return best;
    }
    if (values[i] > values[arg]) arg = i;
  }
  best.value = values[arg];
  best.shift = radii[arg];
  if (radii.size() < 2) return best;
  double a = arg == 0 ? 0.0 : radii[arg - 1];
  double b = arg + 1 < radii.size() ? radii[arg + 1] : 2.0 * radii[arg];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a), dd = a + inv_phi * (b - a);
  double fc = eval(c), fd = eval(dd);
  for (int it = 0; it < 10; ++it) {
    if (fc > fd) {
      b = dd; dd = c; fd = fc;
      c = b - inv_phi * (b - a); fc = eval(c);
    } else {
      a = c; c = dd; fc = fd;
      dd = a + inv_phi * (b - a); fd = eval(dd);
    }
  }
  if (fc > best.value) { best.value = fc; best.shift = c; }
  if (fd > best.value) { best.value = fd; best.shift = dd; }
  if (best.diverged) best.value = std::numeric_limits<double>::infinity();
  return best;
}

}  // namespace spdens
