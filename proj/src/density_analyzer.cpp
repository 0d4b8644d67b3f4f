#include "spdens/density_analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <set>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/hermite.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "spdens/parallel.hpp"
#include "spdens/stats.hpp"

namespace spdens {

namespace {

std::vector<double> difference_coefficients(int n) {
  if (n < 1) throw DomainError("finite difference: order must be >= 1");
  std::vector<double> c(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j <= n; ++j)
    c[static_cast<std::size_t>(j)] =
        ((n - j) % 2 ? -1.0 : 1.0) * boost::math::binomial_coefficient<double>(static_cast<unsigned>(n), static_cast<unsigned>(j));
  return c;
}

std::vector<double> sorted_abs(std::span<const double> h_grid) {
  std::vector<double> h;
  for (double v : h_grid) h.push_back(std::abs(v));
  std::sort(h.begin(), h.end());
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid functions and differences

double GridFunction::l1_norm() const {
  double s = 0.0;
  for (double v : values) s += std::abs(v);
  return s * dx;
}

double GridFunction::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * dx;
}

void GridFunction::validate() const {
  if (!(dx > 0.0) || !std::isfinite(dx)) throw DomainError("grid function: dx must be finite and > 0");
  if (!std::isfinite(x0)) throw DomainError("grid function: x0 must be finite");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("grid function: non-finite value");
}

GridFunction GridFunction::from_function(const std::function<double(double)>& f, double x0, double dx,
                                         std::size_t count) {
  GridFunction g{x0, dx, std::vector<double>(count)};
  for (std::size_t i = 0; i < count; ++i) g.values[i] = f(g.x(i));
  g.validate();
  return g;
}

long long grid_steps(const GridFunction& f, double h) {
  const double r = h / f.dx;
  const double k = std::round(r);
  if (!std::isfinite(r) || std::abs(r - k) > 1e-9 * std::max(1.0, std::abs(r)))
    throw DomainError("finite difference: h = " + std::to_string(h) + " is not a multiple of dx");
  return static_cast<long long>(k);
}

GridFunction finite_difference(const GridFunction& f, double h, int n) {
  if (std::abs(h) > 1.0 + 1e-12) throw DomainError("finite difference: |h| must be <= 1");
  const auto c = difference_coefficients(n);
  const long long m = grid_steps(f, h);
  const long long span = static_cast<long long>(n) * std::abs(m);
  const long long size = static_cast<long long>(f.size());
  GridFunction out;
  out.dx = f.dx;
  // h < 0 reaches back n |m| points, so the result starts there
  const long long first = m < 0 ? span : 0;
  out.x0 = f.x(static_cast<std::size_t>(first));
  const long long count = std::max(0LL, size - span);
  out.values.resize(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= n; ++j) acc += c[static_cast<std::size_t>(j)] * f.values[static_cast<std::size_t>(first + i + j * m)];
    out.values[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

double difference_l1(const GridFunction& f, double h, int n) {
  const auto c = difference_coefficients(n);
  const long long m = std::abs(grid_steps(f, h));
  const long long size = static_cast<long long>(f.size());
  double total = 0.0;
  // the shift-invariant L1 norm is the same for h and -h
  for (long long i = -static_cast<long long>(n) * m; i < size; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= n; ++j) {
      const long long k = i + j * m;
      if (k >= 0 && k < size) acc += c[static_cast<std::size_t>(j)] * f.values[static_cast<std::size_t>(k)];
    }
    total += std::abs(acc);
  }
  return total * f.dx;
}

double besov_norm(const GridFunction& f, double s, int n, std::span<const double> h_grid) {
  if (!(s > 0.0) || !(s < n)) throw DomainError("besov_norm: need 0 < s < n");
  if (h_grid.empty()) throw DomainError("besov_norm: empty h-grid");
  double sup = 0.0;
  for (double h : sorted_abs(h_grid)) {
    if (h < f.dx * (1.0 - 1e-9) || h > 1.0 + 1e-12) throw DomainError("besov_norm: h-grid must lie in [dx, 1]");
    sup = std::max(sup, std::pow(h, -s) * difference_l1(f, h, n));
  }
  return f.l1_norm() + sup;
}

std::vector<double> refine_h_grid(const GridFunction& f, std::span<const double> h_grid) {
  const auto base = sorted_abs(h_grid);
  std::set<long long> steps;
  auto add = [&](double h) { steps.insert(std::max(1LL, std::llround(h / f.dx))); };
  for (std::size_t i = 0; i < base.size(); ++i) {
    add(base[i]);
    if (i + 1 < base.size()) add(std::sqrt(base[i] * base[i + 1]));
  }
  if (!base.empty()) add(0.5 * base.front());
  std::vector<double> out;
  for (long long k : steps) out.push_back(static_cast<double>(k) * f.dx);
  return out;
}

BesovReport besov_report(const GridFunction& f, int n, std::span<const double> s_grid, std::span<const double> h_grid,
                         double tolerance) {
  BesovReport r;
  r.n = n;
  r.s_grid.assign(s_grid.begin(), s_grid.end());
  std::sort(r.s_grid.begin(), r.s_grid.end());
  r.h_grid = sorted_abs(h_grid);
  const auto refined = refine_h_grid(f, r.h_grid);
  bool all_stable = true;
  for (double s : r.s_grid) {
    const double base = besov_norm(f, s, n, r.h_grid);
    const double fine = besov_norm(f, s, n, refined);
    r.norm_estimates.push_back(base);
    r.refined_estimates.push_back(fine);
    const bool ok = base > 0.0 ? std::abs(fine / base - 1.0) <= tolerance : fine == 0.0;
    r.stable.push_back(ok);
    all_stable = all_stable && ok;
    if (all_stable) r.s_empirical = s;
  }
  std::vector<std::pair<double, double>> pts;
  for (double h : r.h_grid) {
    const double v = difference_l1(f, h, n);
    r.difference_norms.push_back(v);
    if (h > 0.0 && v > 0.0) pts.emplace_back(h, v);
  }
  if (pts.size() >= 8) {
    r.decay = fit_exponent(pts);
    r.decay_slope = r.decay.slope;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Density estimation

DensityEstimate kde(std::span<const double> samples, std::optional<double> bandwidth, std::size_t grid_points) {
  if (samples.size() < 100) throw DomainError("kde: need at least 100 samples");
  if (grid_points < 16) throw DomainError("kde: need at least 16 grid points");
  for (double v : samples)
    if (!std::isfinite(v)) throw DomainError("kde: non-finite sample");
  const double mean = sample_mean(samples);
  const double sd = std::sqrt(sample_variance(samples));
  if (!(sd > 0.0)) throw DomainError("kde: samples have zero variance");
  const double m = static_cast<double>(samples.size());
  const double bw = bandwidth ? *bandwidth : 1.06 * sd * std::pow(m, -0.2);
  if (!(bw > 0.0)) throw DomainError("kde: bandwidth must be > 0");

  DensityEstimate est;
  est.bandwidth = bw;
  est.sample_count = samples.size();
  auto& g = est.grid;
  g.x0 = mean - 6.0 * sd;
  g.dx = 12.0 * sd / static_cast<double>(grid_points - 1);
  const long long M = static_cast<long long>(grid_points);

  std::vector<double> bins(grid_points, 0.0);
  for (double v : samples) {
    const double p = (v - g.x0) / g.dx;
    const double fl = std::floor(p);
    const long long i = static_cast<long long>(fl);
    const double frac = p - fl;
    if (i >= 0 && i < M) bins[static_cast<std::size_t>(i)] += 1.0 - frac;
    if (i + 1 >= 0 && i + 1 < M) bins[static_cast<std::size_t>(i + 1)] += frac;
  }

  const long long R = std::min(M - 1, static_cast<long long>(std::ceil(8.0 * bw / g.dx)));
  std::vector<double> kernel(static_cast<std::size_t>(2 * R + 1));
  double ksum = 0.0;
  for (long long k = -R; k <= R; ++k) {
    const double z = static_cast<double>(k) * g.dx / bw;
    ksum += kernel[static_cast<std::size_t>(k + R)] = std::exp(-0.5 * z * z);
  }
  for (auto& k : kernel) k /= ksum;

  g.values.assign(grid_points, 0.0);
  const double scale = 1.0 / (m * g.dx);
  for (long long i = 0; i < M; ++i) {
    const double b = bins[static_cast<std::size_t>(i)];
    if (b == 0.0) continue;
    const long long lo = std::max(0LL, i - R), hi = std::min(M - 1, i + R);
    for (long long j = lo; j <= hi; ++j) g.values[static_cast<std::size_t>(j)] += b * kernel[static_cast<std::size_t>(j - i + R)];
  }
  for (auto& v : g.values) v *= scale;

  const double mass = g.integral();
  if (std::abs(mass - 1.0) > 1e-3)
    throw DomainError("kde: " + std::to_string(1.0 - mass) + " of the mass falls outside mean +- 6 sd");
  return est;
}

double l1_distance(const DensityEstimate& est, const std::function<double(double)>& pdf) {
  const auto& g = est.grid;
  double diff = 0.0, covered = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double p = pdf(g.x(i));
    diff += std::abs(g.values[i] - p);
    covered += p;
  }
  return (diff + std::max(0.0, 1.0 / g.dx - covered)) * g.dx;
}

// ---------------------------------------------------------------------------
// Hermite polynomials and Gaussian derivatives

double hermite(int n, double y) {
  if (n < 0) throw DomainError("hermite: order must be >= 0");
  return boost::math::hermite(static_cast<unsigned>(n), y);
}

namespace {

// ∫ |H_n(y)| exp(-y^2) dy / sqrt(pi), integrated between consecutive roots.
double hermite_abs_moment(int n) {
  using boost::math::quadrature::gauss_kronrod;
  auto f = [n](double y) { return std::abs(hermite(n, y)) * std::exp(-y * y); };
  std::vector<double> roots;
  const double R = std::sqrt(2.0 * n + 1.0) + 1.0;
  const int grid = 400 * (n + 1);
  double prev_x = -R, prev = hermite(n, prev_x);
  for (int i = 1; i <= grid; ++i) {
    const double x = -R + 2.0 * R * i / grid;
    const double v = hermite(n, x);
    if (v == 0.0) {
      roots.push_back(x);
    } else if (prev != 0.0 && (v > 0.0) != (prev > 0.0)) {
      boost::math::tools::eps_tolerance<double> tol(50);
      const auto r = boost::math::tools::bisect([n](double y) { return hermite(n, y); }, prev_x, x, tol);
      roots.push_back(0.5 * (r.first + r.second));
    }
    prev_x = x;
    prev = v;
  }
  std::vector<double> cuts{-std::numeric_limits<double>::infinity()};
  cuts.insert(cuts.end(), roots.begin(), roots.end());
  cuts.push_back(std::numeric_limits<double>::infinity());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    total += gauss_kronrod<double, 61>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-14);
  return total / std::sqrt(std::numbers::pi);
}

}  // namespace

double gaussian_derivative_l1(int n, double variance) {
  if (n < 0) throw DomainError("gaussian_derivative_l1: order must be >= 0");
  if (!(variance > 0.0)) throw DomainError("gaussian_derivative_l1: variance must be > 0");
  static std::mutex m;
  static std::map<int, double> cache;
  double c;
  {
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, hermite_abs_moment(n)).first;
    c = it->second;
  }
  // phi^{(n)}(x) = (-1)^n (2 v)^{-n/2} H_n(x / sqrt(2 v)) phi(x)
  return std::pow(2.0 * variance, -0.5 * n) * c;
}

// ---------------------------------------------------------------------------
// Test functions and the difference-quotient criterion

double holder_norm(const std::function<double(double)>& f, double a, double b, double alpha, std::size_t points) {
  if (!(b > a) || points < 2) throw DomainError("holder_norm: need a < b and at least two points");
  std::vector<double> x(points), v(points);
  double sup = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    x[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    v[i] = f(x[i]);
    sup = std::max(sup, std::abs(v[i]));
  }
  double semi = 0.0;
  for (std::size_t i = 0; i < points; ++i)
    for (std::size_t j = i + 1; j < points; ++j)
      semi = std::max(semi, std::abs(v[i] - v[j]) / std::pow(x[j] - x[i], alpha));
  return sup + semi;
}

namespace {

double unit_bump(double y) { return std::abs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0; }

}  // namespace

TestFunction bump_function(double center, double width, double alpha) {
  if (!(width > 0.0)) throw DomainError("bump_function: width must be > 0");
  TestFunction t;
  t.name = "bump";
  t.center = center;
  t.width = width;
  t.f = [center, width](double x) { return unit_bump((x - center) / width); };
  t.holder_norm = holder_norm(t.f, center - width, center + width, alpha);
  return t;
}

TestFunction holder_spike(double center, double width, double alpha) {
  if (!(width > 0.0)) throw DomainError("holder_spike: width must be > 0");
  TestFunction t;
  t.name = "spike";
  t.center = center;
  t.width = width;
  t.f = [center, width, alpha](double x) {
    const double y = (x - center) / width;
    return std::pow(std::abs(y), alpha) * unit_bump(y);
  };
  t.holder_norm = holder_norm(t.f, center - width, center + width, alpha);
  return t;
}

std::vector<TestFunction> standard_family(double center, double scale, double alpha) {
  std::vector<TestFunction> out;
  for (int k = -1; k <= 1; ++k) {
    out.push_back(bump_function(center + k * scale, scale, alpha));
    out.push_back(holder_spike(center + k * scale, scale, alpha));
  }
  return out;
}

namespace {

struct Expectation {
  double mean = 0.0, se = 0.0;
};

Expectation difference_expectation(std::span<const double> samples, const TestFunction& phi, double h,
                                   const std::vector<double>& c) {
  std::vector<double> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) acc += c[j] * phi.f(samples[i] + static_cast<double>(j) * h);
    v[i] = acc;
  }
  const auto m = moment_of(v);
  return {m.mean, m.standard_error};
}

}  // namespace

DecayReport criterion_decay(std::span<const double> samples, const std::vector<TestFunction>& family, int n,
                            double alpha, std::span<const double> h_grid) {
  if (samples.empty()) throw DomainError("criterion_decay: no samples");
  if (family.empty()) throw DomainError("criterion_decay: empty test-function family");
  if (!(alpha > 0.0) || !(alpha < 1.0)) throw DomainError("criterion_decay: alpha must lie in (0, 1)");
  const auto c = difference_coefficients(n);
  DecayReport r;
  r.n = n;
  r.alpha = alpha;
  r.h_grid = sorted_abs(h_grid);
  std::vector<std::pair<double, double>> pts;
  for (double h : r.h_grid) {
    double sup = 0.0;
    for (std::size_t k = 0; k < family.size(); ++k) {
      const auto e = difference_expectation(samples, family[k], h, c);
      DecayRow row{h, k, e.mean, e.se, std::abs(e.mean) / family[k].holder_norm};
      sup = std::max(sup, row.normalized);
      r.rows.push_back(row);
    }
    r.sup_normalized.push_back(sup);
    if (h > 0.0 && sup > 0.0) pts.emplace_back(h, sup);
  }
  r.fit = fit_exponent(pts);
  r.a = r.fit.slope;
  r.besov_index = r.a - alpha;
  return r;
}

MasterBoundReport master_bound_check(const Simulator& sim, double t, const MasterBoundConfig& cfg,
                                     const QuadratureConfig& quad) {
  if (cfg.h_grid.empty()) throw DomainError("master_bound_check: empty h-grid");
  if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0)) throw DomainError("master_bound_check: alpha must lie in (0, 1)");
  if (cfg.replicas < 2) throw DomainError("master_bound_check: need at least two replicas");
  const double dt = sim.dt();
  const auto h_grid = sorted_abs(cfg.h_grid);

  // eps for every h (rule mode) or the eps grid
  std::vector<double> eps_of_h;
  std::vector<double> eps_set;
  if (cfg.eps_rule) {
    const auto [rho, gamma] = *cfg.eps_rule;
    for (double h : h_grid) {
      const double raw = 0.5 * t * std::pow(h, rho / gamma);
      const double snapped = std::clamp(std::round(raw / dt), 1.0, std::round(t / dt)) * dt;
      eps_of_h.push_back(snapped);
      eps_set.push_back(snapped);
    }
  } else {
    if (cfg.eps_grid.empty()) throw DomainError("master_bound_check: empty eps-grid");
    eps_set = cfg.eps_grid;
  }
  std::sort(eps_set.begin(), eps_set.end());
  eps_set.erase(std::unique(eps_set.begin(), eps_set.end()), eps_set.end());
  for (double e : eps_set)
    if (!(e > 0.0)) throw DomainError("master_bound_check: eps must be > 0");

  const std::size_t R = cfg.replicas, E = eps_set.size();
  std::vector<double> u(R), sq(R * E);
  parallel_for(R, cfg.threads, [&](std::size_t i) {
    const auto ue = sim.smoothing_branches(t, eps_set, cfg.seed + i, u[i]);
    for (std::size_t k = 0; k < E; ++k) sq[i * E + k] = (u[i] - ue[k]) * (u[i] - ue[k]);
  });

  std::vector<double> g_eps(E), err(E), col(R);
  for (std::size_t k = 0; k < E; ++k) {
    g_eps[k] = compute_g(sim.model(), quad, eps_set[k]).value;
    for (std::size_t i = 0; i < R; ++i) col[i] = sq[i * E + k];
    err[k] = moment_of(col).mean;
  }

  const auto family = standard_family(sample_mean(u), std::sqrt(sample_variance(u)), cfg.alpha);
  const auto c = difference_coefficients(cfg.n);
  std::vector<Expectation> lhs(h_grid.size());
  for (std::size_t j = 0; j < h_grid.size(); ++j) {
    if (h_grid[j] == 0.0) continue;
    for (const auto& phi : family) {
      const auto e = difference_expectation(u, phi, h_grid[j], c);
      const double v = std::abs(e.mean) / phi.holder_norm;
      if (v >= lhs[j].mean) lhs[j] = {v, e.se / phi.holder_norm};
    }
  }

  MasterBoundReport rep;
  auto make_row = [&](std::size_t k, std::size_t j) {
    MasterBoundRow row;
    row.eps = eps_set[k];
    row.h = h_grid[j];
    row.lhs = lhs[j].mean;
    row.lhs_se = lhs[j].se;
    row.g_eps = g_eps[k];
    row.smoothing_error = err[k];
    row.rhs_shape = std::pow(row.h, cfg.n) * std::pow(g_eps[k], -0.5 * cfg.n) + std::pow(err[k], 0.5 * cfg.alpha);
    return row;
  };
  if (cfg.eps_rule) {
    for (std::size_t j = 0; j < h_grid.size(); ++j) {
      const auto k = static_cast<std::size_t>(std::lower_bound(eps_set.begin(), eps_set.end(), eps_of_h[j]) - eps_set.begin());
      rep.rows.push_back(make_row(k, j));
    }
  } else {
    for (std::size_t k = 0; k < E; ++k)
      for (std::size_t j = 0; j < h_grid.size(); ++j) rep.rows.push_back(make_row(k, j));
  }

  // coarsest usable point: largest h, then largest eps
  const MasterBoundRow* coarse = nullptr;
  for (const auto& row : rep.rows) {
    if (!(row.h > 0.0) || !(row.rhs_shape > 0.0) || !(row.lhs > 0.0)) continue;
    if (!coarse || row.h > coarse->h || (row.h == coarse->h && row.eps > coarse->eps)) coarse = &row;
  }
  rep.constant = coarse ? coarse->lhs / coarse->rhs_shape : 0.0;
  std::size_t held = 0;
  for (auto& row : rep.rows) {
    row.bound = rep.constant * row.rhs_shape;
    row.holds = row.h == 0.0 || row.lhs <= row.bound * (1.0 + cfg.slack) + 3.0 * row.lhs_se;
    held += row.holds;
  }
  rep.fraction_holding = rep.rows.empty() ? 0.0 : static_cast<double>(held) / static_cast<double>(rep.rows.size());

  if (cfg.eps_rule) {
    std::vector<std::pair<double, double>> lp, bp;
    for (const auto& row : rep.rows) {
      if (row.h > 0.0 && row.lhs > 0.0) lp.emplace_back(row.h, row.lhs);
      if (row.h > 0.0 && row.bound > 0.0) bp.emplace_back(row.h, row.bound);
    }
    if (lp.size() >= 8) rep.lhs_decay = fit_exponent(lp);
    if (bp.size() >= 8) rep.bound_decay = fit_exponent(bp);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

nlohmann::json fit_json(const FitResult& f) { return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}}; }

}  // namespace

nlohmann::json besov_report_json(const BesovReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["s_grid"] = r.s_grid;
  j["norm_estimates"] = r.norm_estimates;
  j["refined_estimates"] = r.refined_estimates;
  j["stable"] = r.stable;
  j["h_grid"] = r.h_grid;
  j["difference_norms"] = r.difference_norms;
  j["decay"] = fit_json(r.decay);
  j["decay_slope"] = r.decay_slope;
  j["s_empirical"] = r.s_empirical;
  j["note"] = "the norm is a lower estimate: the sup over |h| <= 1 is taken on a finite h-grid";
  return j;
}

nlohmann::json decay_report_json(const DecayReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["alpha"] = r.alpha;
  j["h_grid"] = r.h_grid;
  j["sup_normalized"] = r.sup_normalized;
  j["fit"] = fit_json(r.fit);
  j["a"] = r.a;
  j["besov_index"] = r.besov_index;
  return j;
}

nlohmann::json master_bound_json(const MasterBoundReport& r) {
  nlohmann::json j;
  j["constant"] = r.constant;
  j["fraction_holding"] = r.fraction_holding;
  auto& rows = j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"eps", row.eps}, {"h", row.h}, {"lhs", row.lhs}, {"lhs_se", row.lhs_se}, {"g_eps", row.g_eps},
                    {"smoothing_error", row.smoothing_error}, {"rhs_shape", row.rhs_shape}, {"bound", row.bound},
                    {"holds", row.holds}});
  if (r.lhs_decay) j["lhs_decay"] = fit_json(*r.lhs_decay);
  if (r.bound_decay) j["bound_decay"] = fit_json(*r.bound_decay);
  return j;
}

void write_decay_csv(std::ostream& out, const DecayReport& r) {
  const auto old = out.precision(17);
  out << "h,phi,estimate,standard_error,normalized\n";
  for (const auto& row : r.rows)
    out << row.h << ',' << row.phi << ',' << row.estimate << ',' << row.standard_error << ',' << row.normalized << '\n';
  out.precision(old);
}

void write_besov_csv(std::ostream& out, const BesovReport& r) {
  const auto old = out.precision(17);
  out << "h,difference_l1\n";
  for (std::size_t i = 0; i < r.h_grid.size(); ++i) out << r.h_grid[i] << ',' << r.difference_norms[i] << '\n';
  out.precision(old);
}

void write_density_csv(std::ostream& out, const DensityEstimate& est) {
  const auto old = out.precision(17);
  out << "x,density\n";
  for (std::size_t i = 0; i < est.grid.size(); ++i) out << est.grid.x(i) << ',' << est.grid.values[i] << '\n';
  out.precision(old);
}

}  // namespace spdens
