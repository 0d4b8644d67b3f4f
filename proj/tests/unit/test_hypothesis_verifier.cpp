#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "spdens/hypothesis_verifier.hpp"

using namespace spdens;
using std::numbers::pi;

namespace {

ModelSpec wave_riesz(double beta, int d, double T = 1.0) {
  ModelSpec m;
  m.kernel = SpectralKernel::wave();
  m.measure = SpectralMeasure::riesz(beta, d);
  m.d = d;
  m.T = T;
  return m;
}

ModelSpec with_atoms(SpectralKernel k, std::vector<Atom> atoms, int d, double T) {
  ModelSpec m;
  m.kernel = std::move(k);
  m.measure = SpectralMeasure::atoms(std::move(atoms), d);
  m.d = d;
  m.T = T;
  return m;
}

std::vector<std::pair<double, double>> power_points(double c, double p, int n = 8) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < n; ++i) {
    const double t = 0.01 * std::pow(2.0, i);
    pts.emplace_back(t, c * std::pow(t, p));
  }
  return pts;
}

}  // namespace

TEST_CASE("compute_g on single atoms at the origin") {
  const QuadratureConfig cfg;
  const auto wave = with_atoms(SpectralKernel::wave(), {{{0.0, 0.0}, 1.0}}, 2, 1.0);
  CHECK(compute_g(wave, cfg, 1.0).value == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  const auto heat = with_atoms(SpectralKernel::heat(), {{{0.0, 0.0}, 1.0}}, 2, 2.0);
  CHECK(compute_g(heat, cfg, 2.0).value == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(compute_g(heat, cfg, 0.0).value == 0.0);
  CHECK_THROWS_AS(compute_g(heat, cfg, 2.5), DomainError);
}

TEST_CASE("compute_g on atoms matches the closed-form time integral") {
  const QuadratureConfig cfg;
  const auto m = with_atoms(SpectralKernel::wave(), {{{3.0, 4.0}, 0.5}, {{1.0, 0.0}, 2.0}}, 2, 3.0);
  // ∫_0^t sin^2(r s)/r^2 ds = (t/2 - sin(2 r t)/(4 r)) / r^2
  auto piece = [](double r, double t) { return (0.5 * t - std::sin(2.0 * r * t) / (4.0 * r)) / (r * r); };
  for (double t : {0.1, 1.0, 3.0}) {
    const double exact = 0.5 * piece(5.0, t) + 2.0 * piece(1.0, t);
    CHECK(compute_g(m, cfg, t).value == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("compute_g for the wave kernel with a Riesz measure") {
  // omega_1 ∫_0^1 ∫ sin^2(s r)/r^2 dr ds = 2 pi * (pi/2) * 1/2
  const QuadratureConfig cfg;
  const auto g = compute_g(wave_riesz(1.0, 2), cfg, 1.0);
  CHECK_FALSE(g.diverged);
  CHECK(g.value == doctest::Approx(pi * pi / 2.0).epsilon(1e-8));
}

TEST_CASE("compute_g1 on an atom at the origin reduces to g2") {
  const QuadratureConfig cfg;
  const auto m = with_atoms(SpectralKernel::wave(), {{{0.0, 0.0}, 1.0}}, 2, 1.0);
  CHECK(compute_g1(m, cfg, 0.8).value == doctest::Approx(compute_g2(m, cfg, 0.8).value).epsilon(1e-10));
}

TEST_CASE("compute_g2 closed forms") {
  const QuadratureConfig cfg;
  CHECK(compute_g2(wave_riesz(1.0, 2), cfg, 1.0).value == doctest::Approx(1.0 / 3.0));
  ModelSpec heat = wave_riesz(1.0, 2);
  heat.kernel = SpectralKernel::heat();
  CHECK(compute_g2(heat, cfg, 0.7).value == doctest::Approx(0.7));
  CHECK(compute_g2(heat, cfg, 0.0).value == 0.0);

  // custom kernel with |F|^2 <= s^2 attained at the origin
  ModelSpec custom = wave_riesz(1.0, 2);
  custom.kernel = SpectralKernel::custom([](double s, std::span<const double> xi) {
    return s * std::exp(-xi[0] * xi[0]);
  });
  const auto v = compute_g2(custom, cfg, 1.0);
  CHECK(v.numeric_sup);
  CHECK(v.value == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("functional table: exponents and ordering") {
  const QuadratureConfig cfg;
  SUBCASE("wave, d = 3, beta = 1") {
    const auto m = wave_riesz(1.0, 3);
    const auto tab = compute_functionals(m, cfg, cfg.times(m.T));
    CHECK_FALSE(tab.diverged);
    for (std::size_t i = 0; i < tab.t.size(); ++i) {
      CHECK(tab.g[i] <= tab.g1[i] * (1.0 + 1e-8));
      if (i > 0) {
        CHECK(tab.g[i] >= tab.g[i - 1]);
        CHECK(tab.g1[i] >= tab.g1[i - 1]);
        CHECK(tab.g2[i] >= tab.g2[i - 1]);
      }
    }
    CHECK(tab.g1.back() == doctest::Approx(compute_g1(m, cfg, 1.0).value).epsilon(1e-8));
    const auto r = fitted_exponents(tab, cfg.small_time_limit(m.T));
    CHECK(r.gamma == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(r.gamma1 == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(r.gamma2 == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(r.prov_delta == Provenance::Missing);
    CHECK_FALSE(r.complete());
  }
  SUBCASE("heat, d = 2, beta = 1") {
    ModelSpec m = wave_riesz(1.0, 2);
    m.kernel = SpectralKernel::heat();
    const auto tab = compute_functionals(m, cfg, cfg.times(m.T));
    const auto r = fitted_exponents(tab, cfg.small_time_limit(m.T));
    CHECK(r.gamma == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(r.gamma1 == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(r.gamma2 == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("increment integrals") {
  const QuadratureConfig cfg;
  const auto m = wave_riesz(1.0, 3);
  const auto zero = compute_increments(m, cfg, 0.4, 0.4);
  CHECK(zero.I1 == 0.0);
  CHECK(zero.I2 == 0.0);
  CHECK(zero.I3 == 0.0);
  CHECK(zero.I4 == 0.0);
  CHECK_THROWS_AS(compute_increments(m, cfg, 0.5, 0.4), DomainError);

  const double s = 0.5;
  std::vector<std::pair<double, double>> i2, i4;
  for (int k = 0; k < 8; ++k) {
    const double tau = 0.005 * std::pow(1.5, k);
    const auto inc = compute_increments(m, cfg, s, s + tau);
    CHECK_FALSE(inc.diverged);
    i2.emplace_back(tau, inc.I2);
    i4.emplace_back(tau, inc.I4);
    // the sup over frequency is attained at q -> 0 for the wave kernel
    CHECK(inc.I3 == doctest::Approx(s * tau * tau).epsilon(1e-6));
  }
  CHECK(fit_exponent(i2).slope == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(fit_exponent(i4).slope == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("check_A1") {
  const QuadratureConfig cfg;
  const auto a = check_A1(wave_riesz(1.0, 2), cfg);
  CHECK(a.finite);
  CHECK(a.values.second == doctest::Approx(1.0 / 3.0));

  const auto near = check_A1(wave_riesz(1.999, 2), cfg);
  CHECK(near.finite);
  CHECK(near.values.first > 100.0 * a.values.first);

  const auto heat = with_atoms(SpectralKernel::heat(), {{{0.0, 0.0}, 1.5}}, 2, 2.0);
  const auto h = check_A1(heat, cfg);
  CHECK(h.finite);
  CHECK(h.values.first == doctest::Approx(3.0));
  CHECK(h.values.second == doctest::Approx(2.0));

  // a kernel without decay against a Riesz measure violates (A1)
  ModelSpec flat = wave_riesz(1.0, 2);
  flat.kernel = SpectralKernel::custom([](double, std::span<const double>) { return 1.0; });
  CHECK_FALSE(check_A1(flat, cfg).finite);
}

TEST_CASE("check_A3") {
  const QuadratureConfig cfg;
  const std::vector<double> h{1e-1, 1e-2, 1e-3};

  // Heat with a unit atom at the origin: the unshifted difference vanishes, and
  // the sup over eta makes both integrals equal the same scalar sup.
  const auto heat = with_atoms(SpectralKernel::heat(), {{{0.0, 0.0}, 1.0}}, 2, 1.0);
  CHECK(kernel_sup_diff_profile(SpectralKernel::heat(), 0.3, 0.1, 16, 2).value(0.0) == 0.0);
  const auto hr = check_A3(heat, cfg, h);
  CHECK(hr.monotone);
  for (const auto& row : hr.limits) CHECK(row.value1 == doctest::Approx(row.value2).epsilon(1e-6));
  CHECK(hr.limits.back().value1 < 1e-3);

  const auto r = check_A3(wave_riesz(1.0, 2), cfg, h);
  REQUIRE(r.limits.size() == 3);
  CHECK_FALSE(r.diverged);
  CHECK(r.monotone);
  CHECK(r.limits.back().value1 < r.limits.front().value1);
  CHECK(r.limits.back().value1 < 0.02);
  // sup over eta and r of the squared difference is h^2 for every s
  for (const auto& row : r.limits) CHECK(row.value2 == doctest::Approx(row.h * row.h).epsilon(1e-6));
  CHECK(r.slope1 > 0.9);

  const std::vector<double> bad{1e-2, 1e-1};
  CHECK_THROWS_AS(check_A3(heat, cfg, bad), DomainError);
}

TEST_CASE("wave sup-difference profile matches a brute-force sup over r") {
  const auto k = SpectralKernel::wave();
  const double s = 0.7, h = 0.3;
  const auto F = kernel_sup_diff_profile(k, s, h, 16, 2);
  for (double q : {0.0, 0.5, 3.0, 11.0, 40.0, 123.4}) {
    double best = 0.0;
    for (int j = 1; j <= 20000; ++j) {
      const double r = s + h * j / 20000.0;
      const double v = k.radial(r, q) - k.radial(s, q);
      best = std::max(best, v * v);
    }
    CHECK(F.value(q) == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("analytic exponents") {
  const auto w = analytic_exponents(ExponentFamily::wave_riesz(Rational(1)));
  REQUIRE(w.exact);
  CHECK(w.exact->delta == Rational(1));
  CHECK(w.exact->gamma == Rational(2));
  CHECK(w.exact->gamma1 == Rational(2));
  CHECK(w.exact->gamma2 == Rational(3));
  CHECK(w.exact->gamma_bar == Rational(3, 2));
  CHECK(w.exact->s_max == Rational(1, 3));
  CHECK(w.prov_gamma == Provenance::Analytic);

  const auto f = analytic_exponents(ExponentFamily::wave_finite());
  CHECK(f.exact->gamma_bar == Rational(5, 3));
  CHECK(f.exact->s_max == Rational(2, 5));

  const auto h = analytic_exponents(ExponentFamily::heat_riesz(Rational(1)));
  CHECK(h.exact->delta == Rational(1, 2));
  CHECK(h.exact->gamma == Rational(1, 2));
  CHECK(h.exact->gamma2 == Rational(1));
  CHECK(h.exact->gamma_bar == Rational(2));
  CHECK(h.exact->s_max == Rational(1, 2));

  CHECK(analytic_exponents(ExponentFamily::heat_finite()).exact->s_max == Rational(1, 2));

  // closed-form interval endpoints across beta
  for (auto beta : {Rational(1, 4), Rational(3, 4), Rational(3, 2), Rational(1999, 1000)}) {
    const auto r = analytic_exponents(ExponentFamily::wave_riesz(beta));
    CHECK(r.exact->s_max == (Rational(2) - beta) / (Rational(5) - Rational(2) * beta));
    CHECK(r.s_max == doctest::Approx(1.0 - 1.0 / r.gamma_bar));
  }
  CHECK_THROWS_AS(analytic_exponents(ExponentFamily::wave_riesz(Rational(2))), DomainError);
  CHECK_THROWS_AS(analytic_exponents(ExponentFamily::heat_riesz(Rational(0))), DomainError);
  CHECK_THROWS_AS(analytic_exponents(ExponentFamily::wave_riesz(Rational(1), 1)), DomainError);
}

TEST_CASE("fit_exponent") {
  const auto pts = power_points(5.0, 2.0);
  const auto f = fit_exponent(pts);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(5.0)).epsilon(1e-12));

  const auto scaled = fit_exponent(power_points(5e6, 2.0));
  CHECK(scaled.slope == doctest::Approx(f.slope).epsilon(1e-12));
  CHECK(scaled.intercept - f.intercept == doctest::Approx(std::log(1e6)).epsilon(1e-12));

  const auto cubic = fit_exponent(power_points(1.0 / 3.0, 3.0));
  CHECK(std::abs(cubic.slope - 3.0) < 1e-10);

  CHECK_THROWS_AS(fit_exponent(power_points(1.0, 2.0, 7)), DomainError);
  auto neg = power_points(1.0, 2.0);
  neg[3].second = 0.0;
  CHECK_THROWS_AS(fit_exponent(neg), DomainError);
}

TEST_CASE("optimal parameters") {
  const auto w = optimal_parameters(analytic_exponents(ExponentFamily::wave_riesz(Rational(1))));
  CHECK(w.alpha == doctest::Approx(2.0 / 3.0));
  CHECK(*w.exact_alpha == Rational(2, 3));
  CHECK(w.rho == 2.0);
  CHECK(w.boundary_product == doctest::Approx(1.0));
  CHECK(w.epsilon(1.0, 0.1) == doctest::Approx(0.05));
  CHECK(w.epsilon(2.0, -0.3) == doctest::Approx(0.3));

  const auto h = optimal_parameters(analytic_exponents(ExponentFamily::heat_riesz(Rational(1))));
  CHECK(h.alpha == doctest::Approx(0.5));
  CHECK(h.rho == 2.0);

  ExponentReport boundary;
  boundary.delta = 1.0;
  boundary.gamma = 2.0;
  boundary.gamma1 = boundary.gamma2 = 1.0;
  boundary.prov_delta = boundary.prov_gamma = boundary.prov_gamma1 = boundary.prov_gamma2 = Provenance::Fitted;
  boundary.finalize();
  CHECK(boundary.gamma_bar == doctest::Approx(1.0));
  CHECK_THROWS_AS(optimal_parameters(boundary), DomainError);
}

TEST_CASE("rational conversion") {
  CHECK(to_rational(0.5) == Rational(1, 2));
  CHECK(to_rational(1.999) == Rational(1999, 1000));
  CHECK(to_rational(1.0 / 3.0) == Rational(1, 3));
  CHECK(to_string(Rational(2, 5)) == "2/5");
  CHECK(to_string(Rational(3)) == "3");
}

TEST_CASE("family_of built-in models") {
  const auto f = family_of(wave_riesz(1.5, 3));
  REQUIRE(f);
  CHECK(f->kind == ExponentFamily::Kind::WaveRiesz);
  CHECK(f->beta == Rational(3, 2));
  const auto a = family_of(with_atoms(SpectralKernel::heat(), {{{0.0}, 1.0}}, 1, 1.0));
  CHECK(a->kind == ExponentFamily::Kind::HeatFinite);
  ModelSpec c = wave_riesz(1.0, 2);
  c.kernel = SpectralKernel::custom([](double, std::span<const double>) { return 0.0; });
  CHECK_FALSE(family_of(c));
}

TEST_CASE("JSON and CSV output") {
  const auto r = analytic_exponents(ExponentFamily::wave_riesz(Rational(1)));
  const auto j = nlohmann::json::parse(exponent_report_json(r));
  CHECK(j["gamma_bar"].get<double>() == doctest::Approx(1.5));
  CHECK(j["exact"]["s_max"] == "1/3");
  CHECK(j["provenance"]["delta"] == "analytic");

  FunctionalTable tab;
  tab.t = {0.5, 1.0};
  tab.g = {1.0, 2.0};
  tab.g1 = {1.0, 2.0};
  tab.g2 = {0.1, 0.2};
  std::vector<IncrementRow> inc(1);
  inc[0].tau = 0.25;
  inc[0].values.I4 = 0.5;
  std::ostringstream os;
  write_functionals_csv(os, tab, inc);
  const auto s = os.str();
  CHECK(s.rfind("t,g,g1,g2,tau,I1,I2,I3,I4\n", 0) == 0);
  CHECK(s.find("0.5,1,1,0.10000000000000001,0.25,0,0,0,0.5\n") != std::string::npos);
  CHECK(s.find("1,2,2,0.20000000000000001,,,,,\n") != std::string::npos);
}

TEST_CASE("config validation") {
  QuadratureConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.times(2.0).size() == 16);
  CHECK(cfg.times(2.0).back() == doctest::Approx(2.0));
  cfg.time_grid = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.tail_tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
