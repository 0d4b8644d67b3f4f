#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spdens/config.hpp"
#include "spdens/density_analyzer.hpp"
#include "spdens/hypothesis_verifier.hpp"
#include "spdens/spde_simulator.hpp"
#include "spdens/stats.hpp"

namespace py = pybind11;
using namespace spdens;
using nlohmann::json;

namespace {

ModelSpec model_of(const std::string& model_json) { return parse_model(json::parse(model_json)); }

std::pair<long long, long long> frac(const Rational& r) { return {r.numerator(), r.denominator()}; }

py::dict exponents_dict(const ExponentReport& r) {
  py::dict d;
  d["delta"] = r.delta;
  d["gamma"] = r.gamma;
  d["gamma1"] = r.gamma1;
  d["gamma2"] = r.gamma2;
  d["gamma_bar"] = r.gamma_bar;
  d["s_max"] = r.s_max;
  if (r.exact) {
    py::dict e;
    e["delta"] = frac(r.exact->delta);
    e["gamma"] = frac(r.exact->gamma);
    e["gamma1"] = frac(r.exact->gamma1);
    e["gamma2"] = frac(r.exact->gamma2);
    e["gamma_bar"] = frac(r.exact->gamma_bar);
    e["s_max"] = frac(r.exact->s_max);
    d["exact"] = e;
  }
  return d;
}

ExponentFamily family(const std::string& kind, long long num, long long den) {
  const Rational beta(num, den);
  if (kind == "wave_riesz") return ExponentFamily::wave_riesz(beta);
  if (kind == "heat_riesz") return ExponentFamily::heat_riesz(beta);
  if (kind == "wave_finite") return ExponentFamily::wave_finite();
  if (kind == "heat_finite") return ExponentFamily::heat_finite();
  throw DomainError("unknown family '" + kind + "'");
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

}  // namespace

PYBIND11_MODULE(_spdens, m) {
  m.doc() = "Spectral functionals, lattice SPDE simulation and density diagnostics";
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("version_info", [] { return version_info().dump(); });

  m.def("analytic_exponents",
        [](const std::string& kind, long long num, long long den) { return exponents_dict(analytic_exponents(family(kind, num, den))); },
        py::arg("kind"), py::arg("beta_num") = 0, py::arg("beta_den") = 1);
  m.def("closed_form_s_max",
        [](const std::string& kind, long long num, long long den) { return frac(closed_form_s_max(family(kind, num, den))); },
        py::arg("kind"), py::arg("beta_num") = 0, py::arg("beta_den") = 1);

  m.def("compute_g", [](const std::string& model, double t) { return compute_g(model_of(model), {}, t).value; });
  m.def("compute_functionals", [](const std::string& model, std::vector<double> times) {
    const auto mod = model_of(model);
    FunctionalTable tab;
    {
      py::gil_scoped_release release;
      tab = compute_functionals(mod, {}, times);
    }
    py::dict d;
    d["t"] = to_array(tab.t);
    d["g"] = to_array(tab.g);
    d["g1"] = to_array(tab.g1);
    d["g2"] = to_array(tab.g2);
    d["diverged"] = tab.diverged;
    return d;
  });
  m.def("fit_exponent", [](std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size()) throw DomainError("fit_exponent: x and y differ in length");
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < x.size(); ++i) pts.emplace_back(x[i], y[i]);
    const auto f = fit_exponent(pts);
    return py::make_tuple(f.slope, f.intercept, f.r2);
  });

  m.def(
      "simulate",
      [](const std::string& model, int N, double L, double dt, double t, std::size_t replicas, std::uint64_t seed,
         int threads) {
        const auto mod = model_of(model);
        LatticeGrid grid;
        grid.d = mod.d;
        grid.N = N;
        grid.L = L;
        std::vector<double> u;
        {
          py::gil_scoped_release release;
          const Simulator sim(mod, grid, dt);
          u = simulate_replicas(sim, t, replicas, seed, threads);
        }
        return to_array(u);
      },
      py::arg("model"), py::arg("N"), py::arg("L"), py::arg("dt"), py::arg("t"), py::arg("replicas"),
      py::arg("seed") = 1, py::arg("threads") = 1);
  m.def("lattice_variance", [](const std::string& model, int N, double L, double dt, double t) {
    const auto mod = model_of(model);
    LatticeGrid grid;
    grid.d = mod.d;
    grid.N = N;
    grid.L = L;
    return Simulator(mod, grid, dt).lattice_variance(t);
  });

  m.def("kde", [](std::vector<double> samples) {
    const auto est = kde(samples);
    std::vector<double> x(est.grid.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = est.grid.x(i);
    return py::make_tuple(to_array(x), to_array(est.grid.values), est.bandwidth);
  });
  m.def(
      "besov_norm",
      [](std::vector<double> values, double x0, double dx, double s, int n, std::vector<double> h_grid) {
        return besov_norm(GridFunction{x0, dx, std::move(values)}, s, n, h_grid);
      },
      py::arg("values"), py::arg("x0"), py::arg("dx"), py::arg("s"), py::arg("n"), py::arg("h_grid"));
  m.def("difference_l1", [](std::vector<double> values, double x0, double dx, double h, int n) {
    return difference_l1(GridFunction{x0, dx, std::move(values)}, h, n);
  });
  m.def("hermite", &hermite);
  m.def("gaussian_derivative_l1", &gaussian_derivative_l1, py::arg("n"), py::arg("variance"));
  m.def("ks_test_normal", [](std::vector<double> samples, double mean, double variance) {
    const auto r = ks_test_normal(samples, mean, variance);
    return py::make_tuple(r.statistic, r.p_value);
  });
}
