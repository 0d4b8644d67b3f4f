#include "doctest.h"

#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include "spdens/spectral_kernels.hpp"

using namespace spdens;

namespace {

std::vector<double> vec_with_norm(int d, double r) {
  std::vector<double> v(static_cast<std::size_t>(d), 0.0);
  v[0] = r;
  return v;
}

// Rotation of v by a random orthogonal matrix (Gram-Schmidt on Gaussian columns).
std::vector<double> random_rotate(const std::vector<double>& v, std::mt19937_64& rng) {
  const std::size_t d = v.size();
  std::normal_distribution<double> n01;
  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (std::size_t j = 0; j < d; ++j) {
    for (auto& x : q[j]) x = n01(rng);
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < d; ++i) dot += q[j][i] * q[k][i];
      for (std::size_t i = 0; i < d; ++i) q[j][i] -= dot * q[k][i];
    }
    double nn = 0.0;
    for (double x : q[j]) nn += x * x;
    for (auto& x : q[j]) x /= std::sqrt(nn);
  }
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i] += q[j][i] * v[j];
  return out;
}

}  // namespace

TEST_CASE("eval_kernel examples") {
  const auto wave = SpectralKernel::wave();
  const auto heat = SpectralKernel::heat();
  CHECK(eval_kernel(wave, 1.0, vec_with_norm(3, std::numbers::pi)) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(eval_kernel(wave, 1.0, vec_with_norm(3, std::numbers::pi))) < 1e-15);
  CHECK(eval_kernel(wave, 2.0, vec_with_norm(2, 0.0)) == 2.0);
  CHECK(eval_kernel(heat, 1.0, vec_with_norm(2, 1.0 / (2.0 * std::numbers::pi))) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(eval_kernel(wave, 0.0, vec_with_norm(2, 3.0)) == 0.0);
  CHECK(eval_kernel(heat, 0.0, vec_with_norm(2, 3.0)) == 1.0);
  CHECK_THROWS_AS(eval_kernel(wave, -1.0, vec_with_norm(1, 1.0)), DomainError);
}

TEST_CASE("wave kernel is continuous at the origin") {
  const auto wave = SpectralKernel::wave();
  const double t = 1.7;
  CHECK(wave.radial(t, 1e-9) == doctest::Approx(t).epsilon(1e-12));
  CHECK(wave.radial(t, 0.0) == t);
}

TEST_CASE("measure_radial_weight examples") {
  CHECK(measure_radial_weight(SpectralMeasure::riesz(1.0, 3), 2.0) == doctest::Approx(0.25));
  CHECK(measure_radial_weight(SpectralMeasure::riesz(1.0, 2), 1.0) == doctest::Approx(1.0));
  CHECK(measure_radial_weight(SpectralMeasure::riesz(0.5, 1), 4.0) == doctest::Approx(0.5));
  const auto atoms = SpectralMeasure::atoms({{{0.0, 0.0}, 1.0}}, 2);
  CHECK_THROWS_AS(measure_radial_weight(atoms, 1.0), DomainError);
}

TEST_CASE("Riesz construction enforces 0 < beta < min(2, d)") {
  CHECK_THROWS_AS(SpectralMeasure::riesz(2.5, 3), DomainError);
  CHECK_THROWS_AS(SpectralMeasure::riesz(1.0, 1), DomainError);
  CHECK_THROWS_AS(SpectralMeasure::riesz(0.0, 2), DomainError);
  CHECK_THROWS_AS(SpectralMeasure::riesz(2.0, 3), DomainError);
  CHECK_NOTHROW(SpectralMeasure::riesz(1.999, 2));
  CHECK_NOTHROW(SpectralMeasure::riesz(0.5, 1));
}

TEST_CASE("atom measures need positive total mass") {
  CHECK_THROWS_AS(SpectralMeasure::atoms({{{0.0}, 0.0}}, 1), DomainError);
  CHECK_THROWS_AS(SpectralMeasure::atoms({{{0.0}, -1.0}}, 1), DomainError);
  CHECK_THROWS_AS(SpectralMeasure::atoms({{{0.0, 1.0}, 1.0}}, 1), DomainError);
  CHECK(SpectralMeasure::atoms({{{1.0}, 0.5}, {{-1.0}, 0.25}}, 1).total_mass() == 0.75);
}

TEST_CASE("sup_kernel_sq examples") {
  CHECK(sup_kernel_sq(SpectralKernel::wave(), 0.5).value == doctest::Approx(0.25));
  CHECK(sup_kernel_sq(SpectralKernel::heat(), 3.0).value == 1.0);
  CHECK(sup_kernel_sq(SpectralKernel::wave(), 0.0).value == 0.0);

  // numeric oracle over r in [1e-6, 1e3]
  const double t = 0.5;
  double best = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double r = 1e-6 * std::pow(1e9, i / 200000.0);
    const double v = std::sin(t * r) / r;
    best = std::max(best, v * v);
  }
  CHECK(best == doctest::Approx(0.25).epsilon(1e-9));
}

TEST_CASE("custom kernels fall back to a flagged numeric sup") {
  // A kernel peaked away from the origin: r exp(-r^2) with maximum 1/sqrt(2e) at r = 1/sqrt(2)
  const auto k = SpectralKernel::custom([](double, std::span<const double> xi) {
    const double r = std::abs(xi[0]);
    return r * std::exp(-r * r);
  });
  const auto s = sup_kernel_sq(k, 1.0);
  CHECK(s.numeric);
  CHECK(s.value == doctest::Approx(1.0 / (2.0 * std::exp(1.0))).epsilon(1e-9));
  CHECK(s.attained_at == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-4));
}

TEST_CASE("radial symmetry under random rotations") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const auto wave = SpectralKernel::wave();
  const auto heat = SpectralKernel::heat();
  for (int d : {2, 3, 5}) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> xi(static_cast<std::size_t>(d));
      for (auto& x : xi) x = u(rng);
      const auto rxi = random_rotate(xi, rng);
      const double t = std::abs(u(rng));
      CHECK(wave(t, xi) == doctest::Approx(wave(t, rxi)).epsilon(1e-12));
      CHECK(heat(t, xi) == doctest::Approx(heat(t, rxi)).epsilon(1e-12));
    }
  }
}

TEST_CASE("wave bound and heat monotonicity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const auto wave = SpectralKernel::wave();
  const auto heat = SpectralKernel::heat();
  for (int trial = 0; trial < 2000; ++trial) {
    const double t = u(rng), r = 0.2 * u(rng) + 1e-6;
    const double w = wave.radial(t, r);
    CHECK(w * w <= std::min(t * t, 1.0 / (r * r)) * (1.0 + 1e-14));
    const double t2 = t + 0.01 + u(rng);
    CHECK(heat.radial(t2, r) < heat.radial(t, r));
  }
}

TEST_CASE("Riesz homogeneity") {
  const auto mu = SpectralMeasure::riesz(1.3, 3);
  for (double r : {0.1, 1.0, 7.5})
    for (double c : {0.5, 2.0, 10.0})
      CHECK(measure_radial_weight(mu, c * r) ==
            doctest::Approx(std::pow(c, 1.3 - 3.0) * measure_radial_weight(mu, r)).epsilon(1e-13));
}

TEST_CASE("coefficient registry") {
  const auto c = Coefficient::parse("const:2.5");
  CHECK(c(10.0) == 2.5);
  CHECK(c.is_constant);
  const auto a = Coefficient::parse("affine:1,-0.5");
  CHECK(a(2.0) == doctest::Approx(0.0));
  CHECK(a.lipschitz == 0.5);
  const auto s = Coefficient::parse("sin1p:2");
  CHECK(s(std::numbers::pi / 2) == doctest::Approx(3.0));
  CHECK(s.inf_abs == doctest::Approx(1.0));
  CHECK(s.lipschitz == doctest::Approx(1.0));
  CHECK_THROWS_AS(Coefficient::parse("cubic:1"), DomainError);
  CHECK_THROWS_AS(Coefficient::parse("const:x"), DomainError);
  CHECK_THROWS_AS(Coefficient::parse("sin1p:1,1"), DomainError);
}

TEST_CASE("check_model samples ellipticity and Lipschitz bounds") {
  ModelSpec m;
  m.sigma = Coefficient::parse("sin1p:1");
  m.sigma0 = 0.5;
  m.lipschitz_sigma = 0.5;
  auto r = check_model(m);
  CHECK(r.dimension_consistent);
  CHECK(r.ellipticity_holds);
  CHECK(r.lipschitz_holds);
  m.sigma0 = 0.6;
  CHECK_FALSE(check_model(m).ellipticity_holds);
  m.sigma0 = 0.5;
  m.lipschitz_sigma = 0.4;
  CHECK_FALSE(check_model(m).lipschitz_holds);
}

TEST_CASE("sphere areas") {
  CHECK(sphere_area(1) == doctest::Approx(2.0));
  CHECK(sphere_area(2) == doctest::Approx(2.0 * std::numbers::pi));
  CHECK(sphere_area(3) == doctest::Approx(4.0 * std::numbers::pi));
  CHECK(sphere_area(5) == doctest::Approx(8.0 * std::numbers::pi * std::numbers::pi / 3.0));
}
