#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "spdens/density_analyzer.hpp"
#include "spdens/stats.hpp"

using namespace spdens;
using std::numbers::pi;

namespace {

double normal_pdf(double x, double var = 1.0) { return std::exp(-0.5 * x * x / var) / std::sqrt(2 * pi * var); }

std::vector<double> normal_draws(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = z(rng);
  return x;
}

std::vector<double> geometric(double lo, double hi, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  return out;
}

}  // namespace

TEST_CASE("finite differences") {
  const auto c = GridFunction::from_function([](double) { return 3.5; }, -1.0, 0.01, 301);
  for (int n : {1, 2, 4})
    for (double v : finite_difference(c, 0.05, n).values) CHECK(v == 0.0);

  const double h = 0.03;
  const auto sq = GridFunction::from_function([](double x) { return x * x; }, -1.0, 0.01, 301);
  const auto d2 = finite_difference(sq, h, 2);
  CHECK(d2.size() == 301 - 6);
  for (double v : d2.values) CHECK(v == doctest::Approx(2 * h * h).epsilon(1e-9));

  // annihilation of polynomials of degree < n
  for (int n = 1; n <= 5; ++n) {
    const auto p = GridFunction::from_function([n](double x) { return std::pow(1.0 + x, n - 1) - (n > 1 ? 0.5 * x : 0.0); }, -1.0,
                                               0.01, 301);
    const auto d = finite_difference(p, 0.02, n);
    for (double v : d.values) CHECK(std::abs(v) < 1e-9 * (n == 1 ? 1.0 : std::pow(2.0, n)));
  }

  // negative h lands on the shifted overlap
  const auto back = finite_difference(sq, -h, 1);
  CHECK(back.x0 == doctest::Approx(sq.x(3)));
  CHECK(back.values[0] == doctest::Approx(sq.values[0] - sq.values[3]));

  // linearity and the sup-norm bound
  const auto f = GridFunction::from_function([](double x) { return std::sin(5 * x); }, -1.0, 0.01, 301);
  const auto g = GridFunction::from_function([](double x) { return std::exp(x); }, -1.0, 0.01, 301);
  GridFunction comb = f;
  for (std::size_t i = 0; i < comb.size(); ++i) comb.values[i] = 2 * f.values[i] - 3 * g.values[i];
  const auto df = finite_difference(f, 0.1, 3), dg = finite_difference(g, 0.1, 3), dc = finite_difference(comb, 0.1, 3);
  for (std::size_t i = 0; i < dc.size(); ++i) {
    CHECK(dc.values[i] == doctest::Approx(2 * df.values[i] - 3 * dg.values[i]).epsilon(1e-12));
    CHECK(std::abs(df.values[i]) <= 8.0);
  }

  CHECK_THROWS_AS(finite_difference(f, 0.015, 1), DomainError);
  CHECK_THROWS_AS(finite_difference(f, 1.5, 1), DomainError);
  CHECK_THROWS_AS(finite_difference(f, 0.1, 0), DomainError);
}

TEST_CASE("second differences of a Gaussian are bounded by h^2 ||phi''||") {
  const auto f = GridFunction::from_function([](double x) { return normal_pdf(x); }, -10.0, 1e-3, 20001);
  const double bound = gaussian_derivative_l1(2, 1.0);
  // with C2 = 1 the bound holds at every h
  for (double h : geometric(0.002, 0.512, 9)) CHECK(difference_l1(f, h, 2) <= h * h * bound);
  // calibrated at the coarsest h, the h^2 shape persists at the finer ones
  const auto hs = geometric(0.002, 0.128, 7);
  const double c2 = difference_l1(f, hs.back(), 2) / (hs.back() * hs.back() * bound);
  for (double h : hs) CHECK(difference_l1(f, h, 2) <= c2 * h * h * bound * 1.01);
}

TEST_CASE("Besov norm examples") {
  // indicator of [0, 1] on a grid with exactly 1000 cells inside
  const auto ind = GridFunction::from_function([](double x) { return x >= -1e-12 && x < 1.0 - 1e-9 ? 1.0 : 0.0; },
                                               -1.0, 1e-3, 3001);
  const auto hs = geometric(1e-3, 1.0, 13);
  std::vector<double> snapped;
  for (double h : hs) snapped.push_back(std::round(h / 1e-3) * 1e-3);
  CHECK(besov_norm(ind, 0.5, 1, snapped) == doctest::Approx(3.0).epsilon(1e-3));

  const auto zero = GridFunction::from_function([](double) { return 0.0; }, 0.0, 0.01, 100);
  const double coarse[] = {0.01, 0.1, 1.0};
  CHECK(besov_norm(zero, 0.5, 1, coarse) == 0.0);
  CHECK_THROWS_AS(besov_norm(ind, 1.0, 1, snapped), DomainError);
  const double tiny[] = {1e-4};
  CHECK_THROWS_AS(besov_norm(ind, 0.5, 1, tiny), DomainError);

  const auto gauss = GridFunction::from_function([](double x) { return normal_pdf(x); }, -10.0, 1e-3, 20001);
  const auto gh = geometric(0.004, 1.0, 9);
  std::vector<double> g_snapped;
  for (double h : gh) g_snapped.push_back(std::round(h / 1e-3) * 1e-3);
  const auto refined = refine_h_grid(gauss, g_snapped);
  CHECK(refined.size() > g_snapped.size());
  CHECK(besov_norm(gauss, 0.9, 2, refined) == doctest::Approx(besov_norm(gauss, 0.9, 2, g_snapped)).epsilon(0.01));

  double prev = 0.0;
  for (double s : {0.1, 0.3, 0.5, 0.9, 1.5}) {
    const double v = besov_norm(ind, s, 2, snapped);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("Besov report") {
  const auto ind = GridFunction::from_function([](double x) { return x >= -1e-12 && x < 1.0 - 1e-9 ? 1.0 : 0.0; },
                                               -1.0, 1e-3, 3001);
  std::vector<double> hs;
  for (double h : geometric(0.004, 0.5, 8)) hs.push_back(std::round(h / 1e-3) * 1e-3);
  const double s_grid[] = {0.2, 0.5, 0.9};
  const auto r = besov_report(ind, 1, s_grid, hs);
  // the indicator sits in B^s_{1,inf} exactly for s <= 1 with ||Delta_h f|| = 2|h|
  CHECK(r.decay_slope == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.stable[0]);
  CHECK(r.s_empirical >= 0.2);
  CHECK(r.decay_slope >= r.s_empirical - 0.05);

  std::ostringstream csv;
  write_besov_csv(csv, r);
  CHECK(csv.str().rfind("h,difference_l1\n", 0) == 0);
  CHECK(besov_report_json(r)["s_empirical"].get<double>() == r.s_empirical);
}

TEST_CASE("kde") {
  const auto x = normal_draws(100000, 1.0, 1);
  const auto est = kde(x);
  CHECK(est.grid.integral() == doctest::Approx(1.0).epsilon(1e-3));
  for (double v : est.grid.values) CHECK(v >= 0.0);
  CHECK(est.bandwidth == doctest::Approx(1.06 * std::pow(1e5, -0.2)).epsilon(0.02));
  CHECK(l1_distance(est, [](double v) { return normal_pdf(v); }) <= 0.05);

  CHECK_THROWS_AS(kde(std::vector<double>(500, 2.0)), DomainError);
  CHECK_THROWS_AS(kde(std::vector<double>(50, 0.0)), DomainError);
  CHECK_THROWS_AS(kde(x, -1.0), DomainError);
  CHECK(kde(x, 0.3).bandwidth == 0.3);

  std::ostringstream csv;
  write_density_csv(csv, est);
  CHECK(csv.str().rfind("x,density\n", 0) == 0);
}

TEST_CASE("kde of the linear-solution oracle") {
  ModelSpec m;
  m.kernel = SpectralKernel::wave();
  m.measure = SpectralMeasure::riesz(1.0, 2);
  m.d = 2;
  m.T = 1.0;
  m.sigma = Coefficient::constant(1.0);
  const double g = compute_g(m, QuadratureConfig{}, 1.0).value;
  const auto x = linear_exact_samples(1.0, m, 1.0, 100000, 3);
  CHECK(l1_distance(kde(x), [g](double v) { return normal_pdf(v, g); }) <= 0.05);
}

TEST_CASE("Hermite polynomials and Gaussian derivative norms") {
  CHECK(hermite(0, 0.7) == 1.0);
  CHECK(hermite(1, 3.0) == 6.0);
  CHECK(hermite(3, 1.0) == -4.0);
  CHECK(hermite(4, 0.5) == doctest::Approx(16 * 0.0625 - 48 * 0.25 + 12));

  CHECK(gaussian_derivative_l1(0, 3.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(gaussian_derivative_l1(1, 1.0) == doctest::Approx(std::sqrt(2 / pi)).epsilon(1e-12));
  // ∫ |x^2 - 1| phi(x) dx = 4 phi(1)
  CHECK(gaussian_derivative_l1(2, 1.0) == doctest::Approx(4 * normal_pdf(1.0)).epsilon(1e-10));
  for (int n = 0; n <= 6; ++n) {
    const double ratio = gaussian_derivative_l1(n, 4.0) / gaussian_derivative_l1(n, 1.0);
    CHECK(std::abs(ratio - std::pow(2.0, -n)) < 1e-10);
    CHECK(gaussian_derivative_l1(n, 0.3) * std::pow(0.3, 0.5 * n) ==
          doctest::Approx(gaussian_derivative_l1(n, 7.0) * std::pow(7.0, 0.5 * n)).epsilon(1e-13));
  }
  // n = 3 against direct quadrature of |phi'''|
  const auto d3 = GridFunction::from_function(
      [](double x) { return std::abs((3 * x - x * x * x) * normal_pdf(x)); }, -12.0, 1e-4, 240001);
  CHECK(gaussian_derivative_l1(3, 1.0) == doctest::Approx(d3.integral()).epsilon(1e-6));
}

TEST_CASE("test functions") {
  const auto b = bump_function(1.0, 2.0, 0.5);
  CHECK(b.f(1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(b.f(3.0) == 0.0);
  CHECK(b.holder_norm > std::exp(-1.0));
  const auto s = holder_spike(0.0, 1.0, 0.5);
  CHECK(s.f(0.0) == 0.0);
  CHECK(s.f(0.25) == doctest::Approx(0.5 * std::exp(-1.0 / (1.0 - 0.0625))));
  CHECK(standard_family(0.0, 1.0, 0.5).size() == 6);
  // Lipschitz function with constant 1 has 1-Holder seminorm 1
  CHECK(holder_norm([](double x) { return x; }, 0.0, 1.0, 1.0, 50) == doctest::Approx(2.0));
}

TEST_CASE("difference-quotient criterion") {
  const auto x = normal_draws(20000, 1.0, 5);
  const std::vector<TestFunction> bump{bump_function(0.0, 1.0, 0.5)};
  const auto hs = geometric(0.02, 0.32, 8);
  const auto r = criterion_decay(x, bump, 2, 0.5, hs);
  CHECK(r.a >= 1.5);
  CHECK(r.besov_index == doctest::Approx(r.a - 0.5));

  // a point mass: E = Delta_h^n phi(c) and the spike at c only decays like h^alpha
  const std::vector<double> atom(200, 0.3);
  const std::vector<TestFunction> spike{holder_spike(0.3, 1.0, 0.5)};
  const auto p = criterion_decay(atom, spike, 2, 0.5, geometric(0.001, 0.016, 8));
  CHECK(p.a == doctest::Approx(0.5).epsilon(0.05));
  CHECK(p.besov_index < 0.05);

  std::ostringstream csv;
  write_decay_csv(csv, r);
  CHECK(csv.str().rfind("h,phi,estimate,standard_error,normalized\n", 0) == 0);
  CHECK(decay_report_json(r)["a"].get<double>() == r.a);
}

TEST_CASE("master bound on the linear model") {
  ModelSpec m;
  m.kernel = SpectralKernel::wave();
  m.measure = SpectralMeasure::riesz(1.0, 2);
  m.d = 2;
  m.T = 1.0;
  LatticeGrid g;
  g.d = 2;
  g.N = 16;
  g.L = 8.0;
  const Simulator sim(m, g, 1.0 / 16);
  MasterBoundConfig cfg;
  cfg.n = 2;
  cfg.alpha = 0.5;
  cfg.eps_grid = {0.125, 0.25, 0.5};
  cfg.h_grid = {0.0, 0.1, 0.2, 0.4, 0.8};
  cfg.replicas = 400;
  const auto r = master_bound_check(sim, 1.0, cfg);
  CHECK(r.rows.size() == 15);
  for (const auto& row : r.rows) {
    CHECK(row.smoothing_error == 0.0);
    if (row.h == 0.0) CHECK(row.lhs == 0.0);
  }
  CHECK(r.constant > 0.0);
  CHECK(r.fraction_holding == 1.0);
  CHECK(master_bound_json(r)["rows"].size() == 15);
}

TEST_CASE("Kolmogorov-Smirnov") {
  CHECK(kolmogorov_q(0.1) == 1.0);
  CHECK(kolmogorov_q(1.36) == doctest::Approx(0.0494).epsilon(0.01));
  CHECK(kolmogorov_q(1.63) == doctest::Approx(0.0098).epsilon(0.02));
  const auto x = normal_draws(5000, 2.0, 9);
  CHECK(ks_test_normal(x, 0.0, 4.0).p_value > 0.01);
  CHECK(ks_test_normal(x, 0.0, 5.0).p_value < 0.01);
  CHECK(ks_test_normal(x, 0.3, 4.0).p_value < 0.01);
  const std::vector<double> y{0.5};
  CHECK(ks_test(y, [](double v) { return v; }).statistic == doctest::Approx(0.5));
  CHECK(sample_variance(std::vector<double>{1.0, 3.0}) == 2.0);
}
