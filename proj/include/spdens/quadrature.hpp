#pragma once

// One-dimensional quadrature building blocks shared by the hypothesis
// verifier and the density analyzer.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace spdens::quad {

/// 8-point Gauss-Legendre on [a, b].
template <class F>
double gl8(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 8>::integrate(f, a, b);
}

template <class F>
double gl16(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 16>::integrate(f, a, b);
}

/// Integral of f over the segment from `a` to `a + len` (len may be negative)
/// when f behaves like |x - a|^p near a with p > -1. The substitution
/// x = a + len u^q, q = 2/(1+p), turns the endpoint behaviour into u^1.
template <class F>
double integrate_singular_endpoint(F&& f, double a, double len, double p, int subpanels = 2) {
  if (len == 0.0) return 0.0;
  const double q = 2.0 / (1.0 + std::max(p, -0.999));
  auto g = [&](double u) {
    if (u <= 0.0) return 0.0;
    return f(a + len * std::pow(u, q)) * q * std::pow(u, q - 1.0);
  };
  double sum = 0.0;
  for (int i = 0; i < subpanels; ++i) {
    const double u0 = static_cast<double>(i) / subpanels, u1 = static_cast<double>(i + 1) / subpanels;
    sum += gl16(g, u0, u1);
  }
  return sum * std::abs(len);
}

/// Estimate of the integral of f over [0, x1] assuming f(x) ~ c x^p there,
/// with p taken from f(x1) and f(2 x1).
template <class F>
double power_law_head(F&& f, double x1) {
  const double f1 = f(x1);
  if (f1 == 0.0 || !std::isfinite(f1)) return 0.0;
  const double f2 = f(2.0 * x1);
  double p = 0.0;
  if (f1 > 0.0 && f2 > 0.0) p = std::log(f2 / f1) / std::log(2.0);
  p = std::max(p, -0.95);
  return f1 * x1 / (1.0 + p);
}

/// Integral over [0, b] for integrands with an integrable power-type
/// singularity (or non-smoothness) at 0: ratio-2 geometric panels toward 0
/// with 6-point Gauss-Legendre, plus a power-law estimate of the last piece.
template <class F>
double integrate_graded(F&& f, double b, int levels = 16) {
  if (b <= 0.0) return 0.0;
  double sum = 0.0;
  double hi = b;
  for (int k = 0; k < levels; ++k) {
    const double lo = 0.5 * hi;
    sum += boost::math::quadrature::gauss<double, 6>::integrate(f, lo, hi);
    hi = lo;
  }
  return sum + power_law_head(f, hi);
}

/// Cumulative integrals from 0 to each t[i] (t strictly increasing, t[0] > 0).
/// Graded toward 0 on [0, t[0]], then ratio <= 2 panels between grid points.
template <class F>
std::vector<double> integrate_cumulative(F&& f, std::span<const double> t, int levels = 16) {
  std::vector<double> out;
  out.reserve(t.size());
  if (t.empty()) return out;
  if (!(t[0] > 0.0)) throw std::invalid_argument("integrate_cumulative: t[0] must be > 0");
  double acc = integrate_graded(f, t[0], levels);
  out.push_back(acc);
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("integrate_cumulative: t must increase");
    const int pieces = std::max(1, static_cast<int>(std::ceil(std::log2(t[i] / t[i - 1]))));
    const double ratio = std::pow(t[i] / t[i - 1], 1.0 / pieces);
    double lo = t[i - 1];
    for (int k = 0; k < pieces; ++k) {
      const double hi = k + 1 == pieces ? t[i] : lo * ratio;
      acc += gl8(f, lo, hi);
      lo = hi;
    }
    out.push_back(acc);
  }
  return out;
}

inline std::vector<double> geometric_grid(double lo, double hi, int n) {
  if (n < 2 || !(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("geometric_grid: bad range");
  std::vector<double> g(static_cast<std::size_t>(n));
  const double r = std::log(hi / lo) / (n - 1);
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::exp(r * i);
  g.back() = hi;
  return g;
}

}  // namespace spdens::quad
