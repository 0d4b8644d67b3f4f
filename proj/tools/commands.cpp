#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "spdens/density_analyzer.hpp"
#include "spdens/hypothesis_verifier.hpp"
#include "spdens/parallel.hpp"
#include "spdens/spde_simulator.hpp"
#include "spdens/stats.hpp"

namespace spdens::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + p.string() + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

json fit_json(const FitResult& f) { return {{"slope", num(f.slope)}, {"intercept", num(f.intercept)}, {"r2", num(f.r2)}}; }

json moment_json(const MomentEstimate& m) {
  return {{"mean", num(m.mean)}, {"standard_error", num(m.standard_error)}, {"count", m.count}};
}

json model_json(const ModelSpec& m) {
  json j = {{"kernel", to_string(m.kernel.family())},
            {"d", m.d},
            {"T", m.T},
            {"sigma", m.sigma.name},
            {"b", m.b.name},
            {"sigma0", m.sigma0},
            {"lipschitz_sigma", m.lipschitz_sigma},
            {"lipschitz_b", m.lipschitz_b}};
  if (const auto fam = family_of(m)) j["family"] = to_string(*fam);
  return j;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

bool linear_model(const ModelSpec& m) {
  return m.sigma.is_constant && m.b.is_constant && m.b.constant_value == 0.0;
}

std::vector<double> geometric(double lo, double hi, int count) {
  std::vector<double> v;
  for (int i = 0; i < count; ++i)
    v.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  return v;
}

std::optional<FitResult> lag_fit(const std::vector<LagMoment>& rows) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows)
    if (r.moment.mean > 0.0) pts.emplace_back(r.lag, r.moment.mean);
  if (pts.size() < 8) return std::nullopt;
  return fit_exponent(pts);
}

std::string increments_csv(const std::vector<LagMoment>& rows) {
  std::ostringstream os;
  os << "lag,moment,standard_error\n";
  for (const auto& r : rows) os << fmt(r.lag) << ',' << fmt(r.moment.mean) << ',' << fmt(r.moment.standard_error) << '\n';
  return os.str();
}

std::vector<double> read_samples(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open samples '" + path.string() + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("samples '" + path.string() + "': empty file");
  const auto header = split(line);
  const auto it = std::find(header.begin(), header.end(), "u_t0");
  if (it == header.end()) throw ConfigError("samples '" + path.string() + "': no u_t0 column");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    double v = 0.0;
    const std::string& c = col < cells.size() ? cells[col] : std::string();
    const auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
    if (c.empty() || ec != std::errc() || p != c.data() + c.size() || !std::isfinite(v))
      throw ConfigError("samples '" + path.string() + "' line " + std::to_string(lineno) + ": bad u_t0 value '" + c + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

RunContext::RunContext(std::string command, const RunOptions& opts) : command_(std::move(command)), opts_(opts) {
  if (opts_.threads < 1) throw ConfigError("--threads must be >= 1");
  config_text_ = read_file(opts_.config_path);
  json j;
  try {
    j = json::parse(config_text_, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + opts_.config_path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  if (opts_.seed) j["simulation"]["seed"] = *opts_.seed;
  if (opts_.out) j["output"]["dir"] = *opts_.out;
  cfg_ = parse_config(j);
  out_ = cfg_.output_dir;
  std::error_code ec;
  fs::create_directories(out_, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out_.string() + "': " + ec.message());
}

void RunContext::emit(const std::string& name, const std::string& content) {
  const fs::path p = out_ / name;
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
  f << content;
  f.close();
  if (!f) throw std::runtime_error("write failed for '" + p.string() + "'");
  outputs_.emplace_back(name, sha256_hex(content));
}

void RunContext::write_manifest(int exit_code) const {
  json outs = json::array();
  for (const auto& [name, hash] : outputs_) outs.push_back({{"file", name}, {"sha256", hash}});
  std::string reproduce = "spdens " + command_ + " --config " + opts_.config_path + " --seed " +
                          std::to_string(cfg_.simulation.seed) + " --out " + out_.string() + " --threads 1";
  if (opts_.exact) reproduce += " --exact";
  if (opts_.samples) reproduce += " --samples " + *opts_.samples;
  const json m = {{"command", command_},
                  {"config_path", opts_.config_path},
                  {"config_sha256", sha256_hex(config_text_)},
                  {"effective_config", cfg_.source},
                  {"effective_config_sha256", sha256_hex(cfg_.source.dump())},
                  {"seed", cfg_.simulation.seed},
                  {"threads", opts_.threads},
                  {"exit_code", exit_code},
                  {"versions", version_info()},
                  {"outputs", outs},
                  {"reproduce", reproduce}};
  std::ofstream f(out_ / (command_ + ".manifest.json"), std::ios::binary | std::ios::trunc);
  f << m.dump(2) << '\n';
}

int cmd_verify(RunContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& m = cfg.model;
  const auto& q = cfg.quadrature;
  json rep;
  rep["model"] = model_json(m);

  const auto mc = check_model(m);
  rep["model_check"] = {{"ellipticity_holds", mc.ellipticity_holds},
                        {"sigma0_declaration_valid", mc.sigma0_declaration_valid},
                        {"lipschitz_holds", mc.lipschitz_holds},
                        {"sampled_inf_abs_sigma", num(mc.sampled_inf_abs_sigma)},
                        {"sampled_lipschitz_sigma", num(mc.sampled_lipschitz_sigma)},
                        {"sampled_lipschitz_b", num(mc.sampled_lipschitz_b)}};

  const auto a1 = check_A1(m, q);
  rep["A1"] = {{"finite", a1.finite}, {"values", {num(a1.values.first), num(a1.values.second)}}};

  std::vector<double> h3 = cfg.analysis.a3_h_grid;
  if (h3.empty()) h3 = {0.2 * m.T, 0.1 * m.T, 0.05 * m.T, 0.025 * m.T};
  const auto a3 = check_A3(m, q, h3);
  json rows = json::array();
  for (const auto& r : a3.limits) rows.push_back({{"h", r.h}, {"value1", num(r.value1)}, {"value2", num(r.value2)}});
  rep["A3"] = {{"rows", rows}, {"diverged", a3.diverged}, {"monotone", a3.monotone},
               {"slope1", num(a3.slope1)}, {"slope2", num(a3.slope2)}};

  const auto times = q.times(m.T);
  const auto table = compute_functionals(m, q, times);
  rep["functionals_diverged"] = table.diverged;
  rep["numeric_sup"] = table.numeric_sup;
  const auto fitted = fitted_exponents(table, q.small_time_limit(m.T));
  rep["fitted"] = json::parse(exponent_report_json(fitted));

  bool agree = true;
  if (const auto fam = family_of(m)) {
    const auto analytic = analytic_exponents(*fam);
    rep["analytic"] = json::parse(exponent_report_json(analytic));
    rep["closed_form_s_max"] = to_string(closed_form_s_max(*fam));
    json cmp = json::array();
    const double tol = cfg.analysis.exponent_tolerance;
    for (const auto& [name, a, f] : {std::tuple{"gamma", analytic.gamma, fitted.gamma},
                                     std::tuple{"gamma1", analytic.gamma1, fitted.gamma1},
                                     std::tuple{"gamma2", analytic.gamma2, fitted.gamma2}}) {
      const bool ok = std::abs(a - f) <= tol;
      agree = agree && ok;
      cmp.push_back({{"exponent", name}, {"analytic", a}, {"fitted", num(f)}, {"within_tolerance", ok}});
    }
    rep["comparison"] = {{"tolerance", tol}, {"rows", cmp}};
  }
  const bool finite = a1.finite && !a3.diverged && !table.diverged;
  rep["finiteness_checks_pass"] = finite;
  rep["exponents_agree"] = agree;
  rep["passed"] = finite && agree;

  std::ostringstream csv;
  write_functionals_csv(csv, table, {});
  ctx.emit("verify.json", rep.dump(2) + "\n");
  ctx.emit("verify_functionals.csv", csv.str());
  if (rep.contains("analytic"))
    std::cout << "s_max = " << rep["analytic"]["exact"]["s_max"].get<std::string>()
              << ", gamma_bar = " << rep["analytic"]["exact"]["gamma_bar"].get<std::string>() << '\n';
  std::cout << "verify-hypotheses: " << (finite && agree ? "passed" : "FAILED") << '\n';
  return finite && agree ? kSuccess : kCheckFailed;
}

int cmd_fit(RunContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& m = cfg.model;
  const auto& q = cfg.quadrature;
  const auto& sc = cfg.simulation;
  const auto times = q.times(m.T);
  const auto table = compute_functionals(m, q, times);

  // increments I1..I4 at s = T/2 over tau = t/2
  const double s = 0.5 * m.T;
  std::vector<IncrementRow> inc;
  for (double t : times) inc.push_back({0.5 * t, compute_increments(m, q, s, s + 0.5 * t)});

  json rep;
  rep["model"] = model_json(m);
  rep["increments_s"] = s;
  std::optional<FitResult> delta_fit;
  if (sc.increment_s) {
    if (sc.lags.size() < 8) throw ConfigError("simulation.increments.lags: the delta fit needs at least 8 lags");
    if (sc.replicas < 2) throw ConfigError("simulation.replicas: the delta fit needs at least 2 replicas");
    const Simulator sim(m, sc.grid, sc.dt);
    const auto rows = increment_moments(sim, *sc.increment_s, sc.lags, sc.replicas, sc.seed, ctx.options().threads);
    delta_fit = lag_fit(rows);
    ctx.emit("fit_increments.csv", increments_csv(rows));
    rep["delta_source"] = "monte_carlo";
  } else {
    rep["delta_source"] = "none";
  }
  const auto fitted = fitted_exponents(table, q.small_time_limit(m.T), delta_fit);
  rep["fitted"] = json::parse(exponent_report_json(fitted));
  if (const auto fam = family_of(m)) rep["analytic"] = json::parse(exponent_report_json(analytic_exponents(*fam)));
  rep["functionals_diverged"] = table.diverged;

  std::ostringstream csv;
  write_functionals_csv(csv, table, inc);
  ctx.emit("fit.json", rep.dump(2) + "\n");
  ctx.emit("functionals.csv", csv.str());
  std::cout << "fit-exponents: gamma=" << fitted.gamma << " gamma1=" << fitted.gamma1 << " gamma2=" << fitted.gamma2;
  if (delta_fit) std::cout << " delta=" << fitted.delta << " s_max=" << fitted.s_max;
  std::cout << '\n';
  return table.diverged ? kCheckFailed : kSuccess;
}

int cmd_simulate(RunContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& m = cfg.model;
  const auto& sc = cfg.simulation;
  const int threads = ctx.options().threads;
  const bool exact = ctx.options().exact;
  if (exact && !linear_model(m)) throw ConfigError("--exact needs constant sigma and b == const:0");
  if (exact && sc.eps) throw ConfigError("--exact does not support simulation.eps");

  std::vector<double> u(sc.replicas), ueps;
  std::optional<double> g;
  if (linear_model(m)) g = compute_g(m, cfg.quadrature, sc.t).value;
  json rep;
  rep["model"] = model_json(m);
  rep["mode"] = exact ? "exact_gaussian" : "lattice";
  rep["t"] = sc.t;
  rep["seed"] = sc.seed;
  rep["replicas"] = sc.replicas;

  if (exact) {
    const double sd = std::abs(m.sigma.constant_value) * std::sqrt(*g);
    for (std::size_t i = 0; i < sc.replicas; ++i) {
      ReplicaRng rng(sc.seed + i);
      u[i] = sd * rng.normal();
    }
  } else {
    const Simulator sim(m, sc.grid, sc.dt);
    rep["lattice"] = {{"N", sc.grid.N}, {"L", sc.grid.L}, {"d", sc.grid.d}, {"dt", sc.dt}};
    if (sc.eps) {
      ueps.resize(sc.replicas);
      const std::vector<double> eg{*sc.eps};
      parallel_for(sc.replicas, threads, [&](std::size_t i) {
        double ut = 0.0;
        ueps[i] = sim.smoothing_branches(sc.t, eg, sc.seed + i, ut)[0];
        u[i] = ut;
      });
    } else {
      u = simulate_replicas(sim, sc.t, sc.replicas, sc.seed, threads);
    }
    if (sc.increment_s) {
      const auto rows = increment_moments(sim, *sc.increment_s, sc.lags, sc.replicas, sc.seed, threads);
      json lr = json::array();
      for (const auto& r : rows) lr.push_back({{"lag", r.lag}, {"moment", moment_json(r.moment)}});
      rep["increments"] = {{"s", *sc.increment_s}, {"rows", lr}};
      if (sc.replicas >= 2)
        if (const auto f = lag_fit(rows)) rep["increments"]["fit"] = fit_json(*f);
      ctx.emit("increments.csv", increments_csv(rows));
    }
  }

  std::ostringstream csv;
  csv << "seed,t,u_t0,u_eps_t0\n";
  for (std::size_t i = 0; i < sc.replicas; ++i) {
    csv << (sc.seed + i) << ',' << fmt(sc.t) << ',' << fmt(u[i]) << ',';
    if (!ueps.empty()) csv << fmt(ueps[i]);
    csv << '\n';
  }

  if (sc.replicas >= 2) {
    const double mean = sample_mean(u);
    std::vector<double> sq(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) sq[i] = (u[i] - mean) * (u[i] - mean);
    const auto var = moment_of(sq);
    const double unbiased = sample_variance(u);
    rep["mean"] = mean;
    rep["variance"] = unbiased;
    rep["variance_standard_error"] = var.standard_error;
    if (g) {
      const double expected = m.sigma.constant_value * m.sigma.constant_value * *g;
      const double z = (unbiased - expected) / var.standard_error;
      const auto ks = ks_test_normal(u, 0.0, expected);
      rep["linear_oracle"] = {{"g", *g},
                              {"expected_variance", expected},
                              {"z", num(z)},
                              {"within_3_se", std::abs(z) <= 3.0},
                              {"ks_statistic", ks.statistic},
                              {"ks_p_value", ks.p_value}};
    }
    if (!ueps.empty()) {
      std::vector<double> err(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) err[i] = (u[i] - ueps[i]) * (u[i] - ueps[i]);
      rep["smoothing"] = {{"eps", *sc.eps}, {"error", moment_json(moment_of(err))}};
    }
  }
  ctx.emit("samples.csv", csv.str());
  ctx.emit("simulate.json", rep.dump(2) + "\n");
  std::cout << "simulate: " << sc.replicas << " replicas written to " << (ctx.out_dir() / "samples.csv").string() << '\n';
  return kSuccess;
}

int cmd_density(RunContext& ctx) {
  const auto& cfg = ctx.config();
  const auto& m = cfg.model;
  const auto& an = cfg.analysis;
  const fs::path path = ctx.options().samples ? fs::path(*ctx.options().samples) : ctx.out_dir() / "samples.csv";
  const auto samples = read_samples(path);
  const auto est = kde(samples);
  const auto& grid = est.grid;
  const double mean = sample_mean(samples);
  const double sd = std::sqrt(sample_variance(samples));

  const auto fam = family_of(m);
  if (!fam) throw ConfigError("density: no built-in exponent family for this model");
  const double s_max = to_double(closed_form_s_max(*fam));

  std::vector<double> s_grid = an.s_grid;
  if (s_grid.empty())
    for (int k = 1; k <= 10; ++k) s_grid.push_back(s_max * k / 10.0);
  for (double s : s_grid)
    if (s >= an.n) throw ConfigError("analysis.s_grid: every s must satisfy s < n");

  // Besov h-grid: multiples of the density grid step in [dx, 1]
  std::vector<double> h_grid;
  if (an.h_grid.empty()) {
    for (double h = grid.dx; h <= std::min(1.0, 64.0 * grid.dx) * (1 + 1e-12); h *= 2.0) h_grid.push_back(h);
  } else {
    for (double h : an.h_grid) {
      const double k = std::max(1.0, std::round(h / grid.dx));
      if (k * grid.dx <= 1.0 + 1e-12) h_grid.push_back(k * grid.dx);
    }
    std::sort(h_grid.begin(), h_grid.end());
    h_grid.erase(std::unique(h_grid.begin(), h_grid.end()), h_grid.end());
  }
  if (h_grid.empty()) throw ConfigError("analysis.h_grid: no h in [dx, 1] with dx = " + fmt(grid.dx));
  const auto br = besov_report(grid, an.n, s_grid, h_grid);
  const auto br_next = besov_report(grid, an.n + 1, s_grid, h_grid);

  std::vector<double> dh = an.decay_h_grid;
  if (dh.empty()) dh = geometric(sd / 32.0, sd / 2.0, 8);
  const auto family = standard_family(mean, sd, an.alpha);
  const auto decay = criterion_decay(samples, family, an.n, an.alpha, dh);

  json rep;
  rep["model"] = model_json(m);
  rep["samples"] = {{"path", path.string()}, {"count", samples.size()}, {"mean", mean}, {"sd", sd}};
  rep["kde"] = {{"bandwidth", est.bandwidth}, {"dx", grid.dx}, {"points", grid.size()}, {"integral", grid.integral()}};
  rep["s_max"] = s_max;
  rep["fraction"] = an.fraction;
  rep["besov"] = besov_report_json(br);
  rep["besov_next_order"] = besov_report_json(br_next);
  rep["decay"] = decay_report_json(decay);

  if (an.master_replicas > 0) {
    const Simulator sim(m, cfg.simulation.grid, cfg.simulation.dt);
    MasterBoundConfig mb;
    mb.n = an.n;
    mb.alpha = an.alpha;
    mb.eps_grid = an.eps_grid;
    mb.eps_rule = an.eps_rule;
    mb.h_grid = dh;
    mb.replicas = an.master_replicas;
    mb.seed = cfg.simulation.seed;
    mb.threads = ctx.options().threads;
    rep["master_bound"] = master_bound_json(master_bound_check(sim, cfg.simulation.t, mb, cfg.quadrature));
  }

  const bool pass = br.s_empirical >= an.fraction * s_max * (1 - 1e-12);
  rep["s_empirical"] = br.s_empirical;
  rep["passed"] = pass;

  std::ostringstream dcsv, bcsv, ccsv;
  write_density_csv(dcsv, est);
  write_besov_csv(bcsv, br);
  write_decay_csv(ccsv, decay);
  ctx.emit("density.json", rep.dump(2) + "\n");
  ctx.emit("density.csv", dcsv.str());
  ctx.emit("besov.csv", bcsv.str());
  ctx.emit("decay.csv", ccsv.str());
  std::cout << "density: s_empirical = " << br.s_empirical << " (target " << an.fraction << " x " << s_max
            << "), a - alpha = " << decay.besov_index << (pass ? ", passed" : ", FAILED") << '\n';
  return pass ? kSuccess : kCheckFailed;
}

int cmd_report(const fs::path& out_dir) {
  json rep = json::object();
  bool any = false, all_pass = true;
  auto load = [&](const char* name) -> std::optional<json> {
    const fs::path p = out_dir / name;
    if (!fs::exists(p)) return std::nullopt;
    try {
      return json::parse(read_file(p));
    } catch (const json::parse_error& e) {
      throw ConfigError("report: '" + p.string() + "' is not valid JSON: " + e.what());
    }
  };
  if (const auto v = load("verify.json")) {
    any = true;
    all_pass = all_pass && v->value("passed", false);
    rep["verify"] = {{"passed", (*v)["passed"]}, {"fitted", (*v)["fitted"]}};
    if (v->contains("analytic")) rep["verify"]["analytic_exact"] = (*v)["analytic"]["exact"];
  }
  if (const auto f = load("fit.json")) {
    any = true;
    rep["fit"] = {{"fitted", (*f)["fitted"]}, {"delta_source", (*f)["delta_source"]}};
  }
  if (const auto s = load("simulate.json")) {
    any = true;
    json sec = {{"replicas", (*s)["replicas"]}, {"mode", (*s)["mode"]}};
    for (const char* k : {"mean", "variance", "variance_standard_error", "linear_oracle", "smoothing"})
      if (s->contains(k)) sec[k] = (*s)[k];
    rep["simulate"] = sec;
  }
  if (const auto d = load("density.json")) {
    any = true;
    all_pass = all_pass && d->value("passed", false);
    rep["density"] = {{"passed", (*d)["passed"]},
                      {"s_empirical", (*d)["s_empirical"]},
                      {"s_max", (*d)["s_max"]},
                      {"besov_index", (*d)["decay"]["besov_index"]}};
  }
  if (!any) throw ConfigError("report: no reports found in '" + out_dir.string() + "'");
  rep["all_checks_passed"] = all_pass;
  std::ofstream f(out_dir / "report.json", std::ios::binary | std::ios::trunc);
  f << rep.dump(2) << '\n';
  std::cout << rep.dump(2) << '\n';
  return all_pass ? kSuccess : kCheckFailed;
}

}  // namespace spdens::cli
