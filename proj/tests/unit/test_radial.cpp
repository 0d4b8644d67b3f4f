#include "doctest.h"

#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>
#include <gsl/gsl_sf_expint.h>

#include "spdens/quadrature.hpp"
#include "spdens/radial.hpp"

using namespace spdens;
using std::numbers::pi;

namespace {

RadialProfile wave_sq(double s) {
  RadialProfile F;
  F.value = [s](double q) {
    if (q == 0.0) return s * s;
    const double v = std::sin(s * q) / q;
    return v * v;
  };
  F.panel = pi / (2.0 * s);
  F.core = 1.0 / s;
  F.tail.kind = TailModel::Kind::Trig;
  F.tail.power = 2.0;
  F.tail.c0 = 0.5;
  F.tail.cosines = {{-0.5, 2.0 * s}};
  return F;
}

RadialProfile heat_sq(double s) {
  const double a = 8.0 * pi * pi * s;
  RadialProfile F;
  F.value = [a](double q) { return std::exp(-a * q * q); };
  F.panel = 0.5 / std::sqrt(a);
  F.core = 1.0 / std::sqrt(a);
  F.oscillatory = false;
  F.tail.kind = TailModel::Kind::Gaussian;
  F.tail.rate = a;
  return F;
}

// ∫_0^∞ sin^2(r) r^{beta-3} dr for beta in (0,2), beta != 1.
double sin_sq_moment(double beta) {
  return -boost::math::tgamma(beta - 2.0) * std::cos((beta - 2.0) * pi / 2.0) / std::pow(2.0, beta - 1.0);
}

}  // namespace

TEST_CASE("graded quadrature integrates endpoint powers") {
  for (double p : {-0.75, -0.5, 0.0, 0.3, 2.0}) {
    const double exact = std::pow(2.0, p + 1.0) / (p + 1.0);
    const double got = quad::integrate_graded([p](double x) { return std::pow(x, p); }, 2.0);
    CHECK(got == doctest::Approx(exact).epsilon(1e-9));
  }
  const double s = quad::integrate_singular_endpoint([](double x) { return std::pow(1.0 - x, -0.6); }, 1.0, -1.0, -0.6);
  CHECK(s == doctest::Approx(1.0 / 0.4).epsilon(1e-7));
}

TEST_CASE("cumulative quadrature matches separate integrals") {
  const std::vector<double> t{0.01, 0.03, 0.2, 1.0};
  auto f = [](double x) { return std::sqrt(x) * std::cos(x); };
  const auto c = quad::integrate_cumulative(f, t);
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(c[i] == doctest::Approx(quad::integrate_graded(f, t[i])).epsilon(1e-10));
}

TEST_CASE("cos_power_tail against the sine integral") {
  // ∫_R^∞ cos q / q^2 dq = cos R / R - (pi/2 - Si(R))
  for (double R : {0.01, 0.5, 3.0, 40.0, 200.0}) {
    const double exact = std::cos(R) / R - (pi / 2.0 - gsl_sf_Si(R));
    CHECK(cos_power_tail(1.0, R, 2.0) == doctest::Approx(exact).epsilon(1e-9));
  }
  // scaling in the frequency
  CHECK(cos_power_tail(3.0, 2.0, 2.0) == doctest::Approx(3.0 * cos_power_tail(1.0, 6.0, 2.0)).epsilon(1e-12));
  CHECK(cos_power_tail(0.0, 2.0, 2.5) == doctest::Approx(std::pow(2.0, -1.5) / 1.5));
}

TEST_CASE("spherical mean of the Riesz weight matches direct angular quadrature") {
  for (int d : {2, 3, 5}) {
    for (double beta : {0.5, 1.0, 1.5}) {
      for (auto [rho, e] : {std::pair{0.3, 1.0}, std::pair{2.0, 0.7}, std::pair{1.0, 0.999}}) {
        // ∫ |rho theta - e e1|^{beta-d} over S^{d-1} = omega_{d-2} ∫_0^pi (...) sin^{d-2}
        auto f = [&](double th) {
          const double q2 = rho * rho + e * e - 2.0 * rho * e * std::cos(th);
          return std::pow(q2, 0.5 * (beta - d)) * std::pow(std::sin(th), d - 2);
        };
        double direct = 0.0;
        const int n = 4000;
        for (int i = 0; i < n; ++i) direct += quad::gl16(f, pi * i / n, pi * (i + 1) / n);
        direct *= sphere_area(d - 1);
        const double tol = std::abs(rho - e) < 0.01 ? 1e-3 : 1e-9;
        CHECK(riesz_spherical_mean(rho, e, beta, d) == doctest::Approx(direct).epsilon(tol));
      }
    }
  }
}

TEST_CASE("unshifted wave integral matches the Gamma closed form") {
  for (int d : {2, 3, 5}) {
    for (double beta : {0.5, 1.5}) {
      const auto mu = SpectralMeasure::riesz(beta, d);
      for (double s : {0.1, 1.0}) {
        const double exact = sphere_area(d) * sin_sq_moment(beta) * std::pow(s, 2.0 - beta);
        const auto q = shifted_integral(wave_sq(s), mu, 0.0);
        CHECK_FALSE(q.diverged);
        CHECK(q.value == doctest::Approx(exact).epsilon(1e-7));
      }
    }
  }
  // beta = 1: the moment equals pi/2
  const auto q = shifted_integral(wave_sq(1.0), SpectralMeasure::riesz(1.0, 2), 0.0);
  CHECK(q.value == doctest::Approx(pi * pi).epsilon(1e-7));
}

TEST_CASE("unshifted heat integral matches the Gamma closed form") {
  for (int d : {1, 2, 3}) {
    const double beta = d == 1 ? 0.6 : 1.2;
    const auto mu = SpectralMeasure::riesz(beta, d);
    for (double s : {0.01, 0.5}) {
      const double a = 8.0 * pi * pi * s;
      const double exact = sphere_area(d) * boost::math::tgamma(beta / 2.0) / (2.0 * std::pow(a, beta / 2.0));
      CHECK(shifted_integral(heat_sq(s), mu, 0.0).value == doctest::Approx(exact).epsilon(1e-8));
    }
  }
}

TEST_CASE("spherical-mean and angular routes agree under a shift") {
  for (int d : {2, 3}) {
    const auto mu = SpectralMeasure::riesz(1.0, d);
    RadialQuadOptions opt;
    opt.radial_cutoff = 400.0;
    for (double e : {0.05, 0.7, 3.0}) {
      const double a = shifted_integral(wave_sq(1.0), mu, e).value;
      const double b = shifted_integral_angular(wave_sq(1.0), mu, e, opt).value;
      CHECK(a == doctest::Approx(b).epsilon(2e-4));
      const double ha = shifted_integral(heat_sq(0.3), mu, e).value;
      const double hb = shifted_integral_angular(heat_sq(0.3), mu, e, opt).value;
      CHECK(ha == doctest::Approx(hb).epsilon(1e-5));
    }
  }
}

TEST_CASE("non-integrable tails set the divergence flag") {
  // |F|^2 ~ q^{-2} against beta close to 2 stays finite ...
  const auto q = shifted_integral(wave_sq(1.0), SpectralMeasure::riesz(1.999, 2), 0.0);
  CHECK_FALSE(q.diverged);
  CHECK(q.value > 1000.0);
  // ... while a profile without decay does not.
  RadialProfile flat;
  flat.value = [](double) { return 1.0; };
  flat.tail.kind = TailModel::Kind::Unknown;
  CHECK(shifted_integral(flat, SpectralMeasure::riesz(1.0, 2), 0.0).diverged);
}

TEST_CASE("atom measures are exact sums and sup over shifts hits the atom") {
  const auto mu = SpectralMeasure::atoms({{{2.0, 0.0}, 1.5}}, 2);
  const auto F = wave_sq(1.0);
  CHECK(shifted_integral(F, mu, 0.0).value == doctest::Approx(1.5 * std::pow(std::sin(2.0) / 2.0, 2)));
  const auto grid = default_eta_grid();
  const auto sup = sup_over_shift(F, mu, 1.0, grid);
  CHECK(sup.value == doctest::Approx(1.5));
  CHECK(sup.shift == doctest::Approx(2.0));
}

TEST_CASE("radial densities integrate through the angular route") {
  // w(r) = 1 on |xi| <= 1 in d = 3 and F == 1 near the origin gives the ball volume
  const auto mu = SpectralMeasure::radial_density([](double r) { return r <= 1.0 ? 1.0 : 0.0; }, 3, 1.0);
  RadialProfile one;
  one.value = [](double) { return 1.0; };
  one.panel = 0.25;
  CHECK(shifted_integral(one, mu, 0.0).value == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-10));
  CHECK(shifted_integral(one, mu, 0.8).value == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-10));
  CHECK(mu.total_mass() == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-6));
}

TEST_CASE("sup over shifts includes the unshifted value") {
  const auto mu = SpectralMeasure::riesz(1.0, 2);
  const auto F = wave_sq(1.0);
  const auto sup = sup_over_shift(F, mu, 1.0, default_eta_grid());
  CHECK(sup.value >= shifted_integral(F, mu, 0.0).value * (1.0 - 1e-12));
}
