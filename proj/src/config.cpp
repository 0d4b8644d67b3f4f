#include "spdens/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/version.hpp>
#include <fftw3.h>
#include <gsl/gsl_version.h>

namespace spdens {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      fail(where, "unknown key '" + k + "' (allowed: " + list + ")");
    }
  }
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "must be finite");
  return v;
}

double positive(const json& j, const std::string& where) {
  const double v = number(j, where);
  if (!(v > 0.0)) fail(where, "must be > 0, got " + j.dump());
  return v;
}

long long integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<long long>();
}

std::string text(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

std::vector<double> positive_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(positive(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

bool multiple_of(double x, double dt) {
  const double k = x / dt;
  return std::abs(k - std::round(k)) <= 1e-9 * std::max(1.0, k);
}

void require_multiple(double x, double dt, const std::string& where) {
  if (!multiple_of(x, dt)) {
    std::ostringstream os;
    os << "value " << x << " is not a multiple of simulation.dt = " << dt
       << "; choose dt dividing it or move it to a multiple of dt";
    fail(where, os.str());
  }
}

SpectralMeasure parse_measure(const json& j, int d) {
  allow_keys(j, "model.measure", {"type", "beta", "atoms"});
  if (!j.contains("type")) fail("model.measure", "missing 'type' (riesz or atoms)");
  const std::string type = text(j["type"], "model.measure.type");
  if (type == "riesz") {
    if (!j.contains("beta")) fail("model.measure", "riesz requires 'beta'");
    const double beta = number(j["beta"], "model.measure.beta");
    if (!(beta > 0.0 && beta < std::min(2.0, static_cast<double>(d)))) {
      std::ostringstream os;
      os << "beta = " << beta << " out of range: Riesz requires 0 < beta < min(2, d) = "
         << std::min(2, d);
      fail("model.measure.beta", os.str());
    }
    return SpectralMeasure::riesz(beta, d);
  }
  if (type == "atoms") {
    if (!j.contains("atoms") || !j["atoms"].is_array() || j["atoms"].empty())
      fail("model.measure.atoms", "expected a nonempty array of {xi, mass}");
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < j["atoms"].size(); ++i) {
      const std::string where = "model.measure.atoms[" + std::to_string(i) + "]";
      const json& a = j["atoms"][i];
      allow_keys(a, where, {"xi", "mass"});
      if (!a.contains("xi") || !a["xi"].is_array() || static_cast<int>(a["xi"].size()) != d)
        fail(where + ".xi", "expected an array of " + std::to_string(d) + " numbers");
      Atom atom;
      for (const auto& c : a["xi"]) atom.xi.push_back(number(c, where + ".xi"));
      if (!a.contains("mass")) fail(where, "missing 'mass'");
      atom.mass = positive(a["mass"], where + ".mass");
      atoms.push_back(std::move(atom));
    }
    return SpectralMeasure::atoms(std::move(atoms), d);
  }
  fail("model.measure.type", "unknown measure '" + type + "' (riesz or atoms)");
}

Coefficient parse_coefficient(const json& j, const std::string& where) {
  try {
    return Coefficient::parse(text(j, where));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

QuadratureConfig parse_quadrature(const json& j) {
  QuadratureConfig q;
  allow_keys(j, "quadrature", {"radial_cutoff", "tail_tolerance", "panel_count", "eta_grid", "time_grid",
                               "t0", "sup_subgrid", "time_levels"});
  if (j.contains("radial_cutoff")) q.radial_cutoff = positive(j["radial_cutoff"], "quadrature.radial_cutoff");
  if (j.contains("tail_tolerance")) q.tail_tolerance = positive(j["tail_tolerance"], "quadrature.tail_tolerance");
  if (j.contains("panel_count")) q.panel_count = static_cast<int>(integer(j["panel_count"], "quadrature.panel_count"));
  if (j.contains("eta_grid")) {
    if (!j["eta_grid"].is_array()) fail("quadrature.eta_grid", "expected an array of numbers");
    for (const auto& v : j["eta_grid"]) q.eta_grid.push_back(number(v, "quadrature.eta_grid"));
  }
  if (j.contains("time_grid")) q.time_grid = positive_list(j["time_grid"], "quadrature.time_grid");
  if (j.contains("t0")) q.t0 = positive(j["t0"], "quadrature.t0");
  if (j.contains("sup_subgrid")) q.sup_subgrid = static_cast<int>(integer(j["sup_subgrid"], "quadrature.sup_subgrid"));
  if (j.contains("time_levels")) q.time_levels = static_cast<int>(integer(j["time_levels"], "quadrature.time_levels"));
  try {
    q.validate();
  } catch (const std::exception& e) {
    fail("quadrature", e.what());
  }
  return q;
}

SimulationConfig parse_simulation(const json& j, const ModelSpec& model) {
  SimulationConfig s;
  s.grid.d = model.d;
  s.t = model.T;
  allow_keys(j, "simulation", {"N", "L", "dt", "t", "replicas", "seed", "eps", "increments", "memory_budget"});
  if (j.contains("N")) s.grid.N = static_cast<int>(integer(j["N"], "simulation.N"));
  if (j.contains("L")) s.grid.L = positive(j["L"], "simulation.L");
  if (j.contains("memory_budget"))
    s.grid.memory_budget = static_cast<std::size_t>(integer(j["memory_budget"], "simulation.memory_budget"));
  try {
    s.grid.validate();
  } catch (const std::exception& e) {
    fail("simulation", e.what());
  }
  if (j.contains("dt")) s.dt = positive(j["dt"], "simulation.dt");
  if (j.contains("t")) s.t = positive(j["t"], "simulation.t");
  if (s.t > model.T * (1 + 1e-12)) fail("simulation.t", "must not exceed model.T");
  require_multiple(s.t, s.dt, "simulation.t");
  if (j.contains("replicas")) {
    const long long r = integer(j["replicas"], "simulation.replicas");
    if (r < 0) fail("simulation.replicas", "must be >= 0");
    s.replicas = static_cast<std::size_t>(r);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      fail("simulation.seed", "expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("eps") && !j["eps"].is_null()) {
    const double eps = number(j["eps"], "simulation.eps");
    if (eps < 0.0 || eps > s.t) fail("simulation.eps", "must lie in [0, t]");
    require_multiple(eps, s.dt, "simulation.eps");
    s.eps = eps;
  }
  if (j.contains("increments")) {
    const json& inc = j["increments"];
    allow_keys(inc, "simulation.increments", {"s", "lags"});
    if (!inc.contains("s") || !inc.contains("lags")) fail("simulation.increments", "requires 's' and 'lags'");
    const double s0 = number(inc["s"], "simulation.increments.s");
    if (s0 < 0.0) fail("simulation.increments.s", "must be >= 0");
    require_multiple(s0, s.dt, "simulation.increments.s");
    s.lags = positive_list(inc["lags"], "simulation.increments.lags");
    if (s.lags.empty()) fail("simulation.increments.lags", "must be nonempty");
    for (double lag : s.lags) {
      require_multiple(lag, s.dt, "simulation.increments.lags");
      if (s0 + lag > model.T * (1 + 1e-12)) fail("simulation.increments", "s + lag exceeds model.T");
    }
    s.increment_s = s0;
  }
  return s;
}

AnalysisConfig parse_analysis(const json& j, const SimulationConfig& sim) {
  AnalysisConfig a;
  allow_keys(j, "analysis", {"n", "alpha", "s_grid", "h_grid", "eps_grid", "eps_rule", "fraction",
                             "master_replicas", "exponent_tolerance", "a3_h_grid", "decay_h_grid"});
  if (j.contains("n")) {
    a.n = static_cast<int>(integer(j["n"], "analysis.n"));
    if (a.n < 1 || a.n > 8) fail("analysis.n", "must lie in 1..8");
  }
  if (j.contains("alpha")) {
    a.alpha = number(j["alpha"], "analysis.alpha");
    if (!(a.alpha > 0.0 && a.alpha < 1.0)) fail("analysis.alpha", "must lie in (0, 1)");
  }
  if (j.contains("s_grid")) {
    a.s_grid = positive_list(j["s_grid"], "analysis.s_grid");
    for (double s : a.s_grid)
      if (s >= a.n) fail("analysis.s_grid", "every s must satisfy s < n");
  }
  if (j.contains("h_grid")) {
    a.h_grid = positive_list(j["h_grid"], "analysis.h_grid");
    for (double h : a.h_grid)
      if (h > 1.0) fail("analysis.h_grid", "h must lie in (0, 1]");
  }
  if (j.contains("decay_h_grid")) a.decay_h_grid = positive_list(j["decay_h_grid"], "analysis.decay_h_grid");
  if (j.contains("eps_grid")) {
    a.eps_grid = positive_list(j["eps_grid"], "analysis.eps_grid");
    for (double e : a.eps_grid) {
      if (e > sim.t) fail("analysis.eps_grid", "eps must not exceed simulation.t");
      require_multiple(e, sim.dt, "analysis.eps_grid");
    }
  }
  if (j.contains("eps_rule")) {
    const json& r = j["eps_rule"];
    allow_keys(r, "analysis.eps_rule", {"rho", "gamma"});
    if (!r.contains("rho") || !r.contains("gamma")) fail("analysis.eps_rule", "requires 'rho' and 'gamma'");
    a.eps_rule = std::make_pair(positive(r["rho"], "analysis.eps_rule.rho"),
                                positive(r["gamma"], "analysis.eps_rule.gamma"));
  }
  if (j.contains("fraction")) {
    a.fraction = number(j["fraction"], "analysis.fraction");
    if (!(a.fraction > 0.0 && a.fraction <= 1.0)) fail("analysis.fraction", "must lie in (0, 1]");
  }
  if (j.contains("master_replicas")) {
    const long long r = integer(j["master_replicas"], "analysis.master_replicas");
    if (r < 0) fail("analysis.master_replicas", "must be >= 0");
    a.master_replicas = static_cast<std::size_t>(r);
  }
  if (j.contains("exponent_tolerance"))
    a.exponent_tolerance = positive(j["exponent_tolerance"], "analysis.exponent_tolerance");
  if (j.contains("a3_h_grid")) {
    a.a3_h_grid = positive_list(j["a3_h_grid"], "analysis.a3_h_grid");
    for (std::size_t i = 1; i < a.a3_h_grid.size(); ++i)
      if (!(a.a3_h_grid[i] < a.a3_h_grid[i - 1])) fail("analysis.a3_h_grid", "must be strictly decreasing");
  }
  if (a.master_replicas > 0 && a.eps_grid.empty() && !a.eps_rule)
    fail("analysis", "master_replicas > 0 needs eps_grid or eps_rule");
  return a;
}

}  // namespace

ModelSpec parse_model(const json& j) {
  allow_keys(j, "model", {"kernel", "measure", "d", "T", "sigma", "b", "sigma0", "lipschitz_sigma",
                          "lipschitz_b"});
  ModelSpec m;
  if (!j.contains("kernel")) fail("model", "missing 'kernel' (wave or heat)");
  const std::string kernel = text(j["kernel"], "model.kernel");
  if (kernel == "wave") m.kernel = SpectralKernel::wave();
  else if (kernel == "heat") m.kernel = SpectralKernel::heat();
  else fail("model.kernel", "unknown kernel '" + kernel + "' (wave or heat)");
  if (!j.contains("d")) fail("model", "missing 'd'");
  m.d = static_cast<int>(integer(j["d"], "model.d"));
  if (m.d < 1 || m.d > 8) fail("model.d", "must lie in 1..8");
  if (!j.contains("measure")) fail("model", "missing 'measure'");
  m.measure = parse_measure(j["measure"], m.d);
  if (j.contains("T")) m.T = positive(j["T"], "model.T");
  if (j.contains("sigma")) m.sigma = parse_coefficient(j["sigma"], "model.sigma");
  if (j.contains("b")) m.b = parse_coefficient(j["b"], "model.b");
  m.lipschitz_sigma = m.sigma.lipschitz;
  m.lipschitz_b = m.b.lipschitz;
  if (j.contains("lipschitz_sigma")) m.lipschitz_sigma = number(j["lipschitz_sigma"], "model.lipschitz_sigma");
  if (j.contains("lipschitz_b")) m.lipschitz_b = number(j["lipschitz_b"], "model.lipschitz_b");
  if (m.lipschitz_sigma < m.sigma.lipschitz || m.lipschitz_b < m.b.lipschitz)
    fail("model", "declared Lipschitz constants are smaller than the registry values");
  if (j.contains("sigma0")) {
    m.sigma0 = number(j["sigma0"], "model.sigma0");
    if (m.sigma0 < 0.0) fail("model.sigma0", "must be >= 0");
    if (m.sigma0 > m.sigma.inf_abs) {
      std::ostringstream os;
      os << "sigma0 = " << m.sigma0 << " exceeds inf |sigma| = " << m.sigma.inf_abs << " for '"
         << m.sigma.name << "'";
      fail("model.sigma0", os.str());
    }
  }
  return m;
}

ExperimentConfig parse_config(const json& j) {
  allow_keys(j, "config", {"model", "quadrature", "simulation", "analysis", "output"});
  ExperimentConfig c;
  if (!j.contains("model")) fail("config", "missing 'model' block");
  c.model = parse_model(j["model"]);
  c.quadrature = parse_quadrature(j.value("quadrature", json::object()));
  c.simulation = parse_simulation(j.value("simulation", json::object()), c.model);
  c.analysis = parse_analysis(j.value("analysis", json::object()), c.simulation);
  if (j.contains("output")) {
    const json& o = j["output"];
    allow_keys(o, "output", {"dir"});
    if (o.contains("dir")) c.output_dir = text(o["dir"], "output.dir");
  }
  c.source = j;
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return parse_config(j);
}

json version_info() {
  return {
      {"spdens", "0.1.0"},
      {"fftw", std::string(fftw_version)},
      {"boost", BOOST_LIB_VERSION},
      {"gsl", GSL_VERSION},
      {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                            std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
#if defined(__clang__)
      {"compiler", std::string("clang ") + __clang_version__},
#elif defined(__GNUC__)
      {"compiler", std::string("gcc ") + __VERSION__},
#else
      {"compiler", "unknown"},
#endif
  };
}

}  // namespace spdens
