#include "spdens/spde_simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <fftw3.h>

#include "spdens/parallel.hpp"

namespace spdens {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourPiSq = 4.0 * kPi * kPi;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

// Full Gauss-Legendre rule on [-1, 1].
template <int Points>
std::vector<std::pair<double, double>> gl_rule() {
  using G = boost::math::quadrature::gauss<double, Points>;
  std::vector<std::pair<double, double>> r;
  const auto& x = G::abscissa();
  const auto& w = G::weights();
  for (std::size_t i = 0; i < x.size(); ++i) {
    r.emplace_back(x[i], w[i]);
    if (x[i] != 0.0) r.emplace_back(-x[i], w[i]);
  }
  return r;
}

// ∫ over the box center + [-a, a]^d of f(|xi|), split into m^d sub-boxes.
template <class F>
double box_integral(F&& f, std::span<const double> center, double a, int m,
                    const std::vector<std::pair<double, double>>& rule) {
  const int d = static_cast<int>(center.size());
  const double h = 2.0 * a / m;
  const std::size_t q = rule.size();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(m) * q;
  double sum = 0.0;
  std::array<double, 3> x{};
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    double weight = 1.0, r2 = 0.0;
    for (int i = 0; i < d; ++i) {
      const std::size_t node = rest % q;
      rest /= q;
      const std::size_t cell = rest % static_cast<std::size_t>(m);
      rest /= static_cast<std::size_t>(m);
      const double lo = center[static_cast<std::size_t>(i)] - a + h * static_cast<double>(cell);
      x[static_cast<std::size_t>(i)] = lo + 0.5 * h * (rule[node].first + 1.0);
      weight *= 0.5 * h * rule[node].second;
      r2 += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    }
    sum += weight * f(std::sqrt(r2));
  }
  return sum;
}

// ∫_{[-a,a]^d} |xi|^{beta-d}: 2^d d a^beta / beta * ∫_{[0,1]^{d-1}} (1 + |y|^2)^{(beta-d)/2} dy.
double riesz_origin_cell(double beta, int d, double a) {
  double inner = 1.0;
  if (d > 1) {
    const auto rule = gl_rule<20>();
    const std::vector<double> center(static_cast<std::size_t>(d - 1), 0.5);
    inner = box_integral([&](double r) { return std::pow(1.0 + r * r, 0.5 * (beta - d)); }, center, 0.5, 2, rule);
  }
  return std::pow(2.0, d) * d * std::pow(a, beta) / beta * inner;
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

// ---------------------------------------------------------------------------
// Lattice

std::size_t LatticeGrid::size() const {
  std::size_t n = 1;
  for (int i = 0; i < d; ++i) n *= static_cast<std::size_t>(N);
  return n;
}

void LatticeGrid::validate() const {
  if (d < 1 || d > 3) throw DomainError("lattice: d must be 1, 2 or 3");
  if (N < 8 || !is_power_of_two(N)) throw DomainError("lattice: N must be a power of two >= 8");
  if (!(L > 0.0)) throw DomainError("lattice: L must be > 0");
  if (size() > memory_budget) throw DomainError("lattice: N^d exceeds the memory budget");
}

double LatticeGrid::frequency(int j) const {
  const int k = j < N / 2 ? j : j - N;
  return 2.0 * kPi * k / L;
}

std::array<int, 3> LatticeGrid::index(std::size_t flat) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int i = d - 1; i >= 0; --i) {
    idx[static_cast<std::size_t>(i)] = static_cast<int>(flat % static_cast<std::size_t>(N));
    flat /= static_cast<std::size_t>(N);
  }
  return idx;
}

std::size_t LatticeGrid::mirror(std::size_t flat) const {
  const auto idx = index(flat);
  std::size_t out = 0;
  for (int i = 0; i < d; ++i) out = out * static_cast<std::size_t>(N) + static_cast<std::size_t>((N - idx[static_cast<std::size_t>(i)]) % N);
  return out;
}

double LatticeGrid::frequency_norm(std::size_t flat) const {
  const auto idx = index(flat);
  double r2 = 0.0;
  for (int i = 0; i < d; ++i) {
    const double xi = frequency(idx[static_cast<std::size_t>(i)]);
    r2 += xi * xi;
  }
  return std::sqrt(r2);
}

ReplicaRng::ReplicaRng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  engine_.seed(seq);
}

// ---------------------------------------------------------------------------
// Noise

NoiseSynth NoiseSynth::from_measure(const LatticeGrid& grid, const SpectralMeasure& mu) {
  grid.validate();
  if (mu.dimension() != grid.d) throw DomainError("noise: measure dimension differs from the lattice");
  NoiseSynth out;
  out.grid = grid;
  const std::size_t n = grid.size();
  std::vector<double> mass(n, 0.0);
  const double a = kPi / grid.L;  // half-width of a frequency cell

  auto cell_of = [&](const std::vector<double>& xi) {
    std::size_t flat = 0;
    for (int i = 0; i < grid.d; ++i) {
      const long long k = std::llround(xi[static_cast<std::size_t>(i)] * grid.L / (2.0 * kPi));
      if (k < -grid.N / 2 || k >= grid.N / 2)
        throw DomainError("noise: atom frequency outside the lattice band (increase N or reduce L)");
      flat = flat * static_cast<std::size_t>(grid.N) + static_cast<std::size_t>((k + grid.N) % grid.N);
    }
    return flat;
  };

  switch (mu.kind()) {
    case MeasureKind::FiniteAtoms:
      for (const auto& atom : mu.atom_list()) {
        const std::size_t k = cell_of(atom.xi);
        mass[k] += 0.5 * atom.mass;
        mass[grid.mirror(k)] += 0.5 * atom.mass;
      }
      break;
    case MeasureKind::Riesz: {
      const double beta = mu.beta();
      const int d = grid.d;
      const auto near = gl_rule<8>();
      const auto far = gl_rule<3>();
      // masses depend only on the sorted absolute multi-index
      std::map<std::array<int, 3>, double> cache;
      for (std::size_t f = 0; f < n; ++f) {
        const auto idx = grid.index(f);
        std::array<int, 3> key{0, 0, 0};
        int kmax = 0;
        for (int i = 0; i < d; ++i) {
          const int j = idx[static_cast<std::size_t>(i)];
          key[static_cast<std::size_t>(i)] = std::abs(j < grid.N / 2 ? j : j - grid.N);
          kmax = std::max(kmax, key[static_cast<std::size_t>(i)]);
        }
        std::sort(key.begin(), key.begin() + d);
        auto it = cache.find(key);
        if (it == cache.end()) {
          double m;
          if (kmax == 0) {
            m = riesz_origin_cell(beta, d, a);
          } else {
            std::vector<double> center(static_cast<std::size_t>(d));
            for (int i = 0; i < d; ++i) center[static_cast<std::size_t>(i)] = 2.0 * a * key[static_cast<std::size_t>(i)];
            auto w = [&](double r) { return std::pow(r, beta - d); };
            if (kmax <= 2)
              m = box_integral(w, center, a, 4, near);
            else if (kmax <= 8)
              m = box_integral(w, center, a, 1, near);
            else
              m = box_integral(w, center, a, 1, far);
          }
          it = cache.emplace(key, m).first;
        }
        mass[f] = it->second;
      }
      break;
    }
    case MeasureKind::FiniteRadialDensity: {
      const auto rule = gl_rule<3>();
      const auto& w = mu.density();
      for (std::size_t f = 0; f < n; ++f) {
        const auto idx = grid.index(f);
        std::vector<double> center(static_cast<std::size_t>(grid.d));
        for (int i = 0; i < grid.d; ++i) center[static_cast<std::size_t>(i)] = grid.frequency(idx[static_cast<std::size_t>(i)]);
        mass[f] = box_integral(w, center, a, 1, rule);
      }
      break;
    }
  }
  out.weights.resize(n);
  out.mirrors.resize(n);
  for (std::size_t f = 0; f < n; ++f) out.mirrors[f] = grid.mirror(f);
  for (std::size_t f = 0; f < n; ++f) {
    if (!std::isfinite(mass[f]) || mass[f] < 0.0) throw DomainError("noise: non-finite cell mass");
    out.weights[f] = std::sqrt(mass[f]);
  }
  return out;
}

double NoiseSynth::covariance_at_lag(std::span<const int> lag) const {
  if (static_cast<int>(lag.size()) != grid.d) throw DomainError("covariance_at_lag: lag has the wrong dimension");
  const double dx = grid.L / grid.N;
  double sum = 0.0;
  for (std::size_t f = 0; f < weights.size(); ++f) {
    const auto idx = grid.index(f);
    double phase = 0.0;
    for (int i = 0; i < grid.d; ++i) phase += grid.frequency(idx[static_cast<std::size_t>(i)]) * lag[static_cast<std::size_t>(i)] * dx;
    sum += weights[f] * weights[f] * std::cos(phase);
  }
  return sum;
}

namespace {

void synthesize_into(const NoiseSynth& noise, double dt, ReplicaRng& rng, Spectrum& out) {
  const std::size_t n = noise.weights.size();
  out.resize(n);
  const double scale = std::sqrt(dt);
  const double half = std::sqrt(0.5);
  for (std::size_t f = 0; f < n; ++f) {
    const std::size_t m = noise.mirrors[f];
    if (m < f) continue;
    const double w = noise.weights[f] * scale;
    if (m == f) {
      out[f] = {w * rng.normal(), 0.0};
    } else {
      const double re = rng.normal() * half, im = rng.normal() * half;
      out[f] = {w * re, w * im};
      out[m] = {w * re, -w * im};
    }
  }
}

}  // namespace

Spectrum synthesize_increment_hat(const NoiseSynth& noise, double dt, ReplicaRng& rng) {
  if (!(dt > 0.0)) throw DomainError("synthesize_increment: dt must be > 0");
  Spectrum out;
  synthesize_into(noise, dt, rng, out);
  return out;
}

double FieldState::value_at_origin() const {
  double s = 0.0;
  for (const auto& c : u_hat) s += c.real();
  return s;
}

MomentEstimate moment_of(std::span<const double> values) {
  MomentEstimate m;
  m.count = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.standard_error = std::sqrt(ss / static_cast<double>(values.size() - 1) / static_cast<double>(values.size()));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Simulator

struct Simulator::Plans {
  fftw_plan backward = nullptr;  // c2c, in place
  fftw_plan c2r = nullptr;       // half spectrum -> real field
  fftw_plan r2c = nullptr;       // real field -> half spectrum
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (fftw_plan p : {backward, c2r, r2c})
      if (p) fftw_destroy_plan(p);
  }
};

Simulator::Simulator(const ModelSpec& model, const LatticeGrid& grid, double dt)
    : model_(model), grid_(grid), dt_(dt) {
  grid_.validate();
  if (!(dt > 0.0)) throw DomainError("simulator: dt must be > 0");
  if (model.d != grid.d) throw DomainError("simulator: model dimension differs from the lattice");
  if (model.kernel.family() == KernelFamily::Custom)
    throw DomainError("simulator: custom kernels have no lattice propagator");
  noise_ = NoiseSynth::from_measure(grid_, model.measure);
  sigma_const_ = model.sigma.is_constant;
  drift_const_ = model.b.is_constant;
  drift_zero_ = drift_const_ && model.b.constant_value == 0.0;

  const std::size_t n = grid_.size();
  cos_.resize(n);
  inj_u_.resize(n);
  drift_u_.resize(n);
  const bool wave = model.kernel.family() == KernelFamily::Wave;
  if (wave) {
    sin_over_.resize(n);
    neg_w_sin_.resize(n);
    inj_v_.resize(n);
    drift_v_.resize(n);
  }
  for (std::size_t f = 0; f < n; ++f) {
    const double w = grid_.frequency_norm(f);
    if (wave) {
      const double c = std::cos(w * dt), s = std::sin(w * dt);
      cos_[f] = c;
      neg_w_sin_[f] = -w * s;
      if (w == 0.0) {
        sin_over_[f] = dt;
        inj_u_[f] = 0.5 * dt;
        drift_u_[f] = 0.5 * dt;
        drift_v_[f] = 1.0;
      } else {
        sin_over_[f] = s / w;
        inj_u_[f] = std::sin(0.5 * w * dt) / w;
        const double sh = std::sin(0.5 * w * dt);
        drift_u_[f] = 2.0 * sh * sh / (w * w * dt);
        drift_v_[f] = s / (w * dt);
      }
      inj_v_[f] = std::cos(0.5 * w * dt);
    } else {
      const double lam = kFourPiSq * w * w;
      cos_[f] = std::exp(-lam * dt);
      if (lam == 0.0) {
        inj_u_[f] = 1.0;
        drift_u_[f] = 1.0;
      } else {
        inj_u_[f] = std::sqrt(-std::expm1(-2.0 * lam * dt) / (2.0 * lam * dt));
        drift_u_[f] = -std::expm1(-lam * dt) / (lam * dt);
      }
    }
  }

  half_size_ = n / static_cast<std::size_t>(grid_.N) * static_cast<std::size_t>(grid_.N / 2 + 1);
  plans_ = std::make_unique<Plans>();
  std::array<int, 3> dims{grid_.N, grid_.N, grid_.N};
  Spectrum scratch(n), half(half_size_);
  std::vector<double> real(n);
  std::lock_guard<std::mutex> lock(planner_mutex());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->backward =
      fftw_plan_dft(grid_.d, dims.data(), as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_BACKWARD, flags);
  plans_->c2r = fftw_plan_dft_c2r(grid_.d, dims.data(), as_fftw(half.data()), real.data(), flags);
  plans_->r2c = fftw_plan_dft_r2c(grid_.d, dims.data(), real.data(), as_fftw(half.data()), flags);
  if (!plans_->backward || !plans_->c2r || !plans_->r2c) throw std::runtime_error("simulator: FFTW planning failed");
}

Simulator::~Simulator() = default;

int Simulator::steps_to(double t) const {
  const double r = t / dt_;
  const double k = std::round(r);
  if (!(t >= 0.0) || std::abs(r - k) > 1e-9 * std::max(1.0, r))
    throw DomainError("simulator: t must be a nonnegative integer multiple of dt");
  return static_cast<int>(k);
}

FieldState Simulator::zero_state() const {
  FieldState s;
  s.u_hat.assign(grid_.size(), {0.0, 0.0});
  if (model_.kernel.family() == KernelFamily::Wave) s.v_hat.assign(grid_.size(), {0.0, 0.0});
  return s;
}

void Simulator::fft_backward(Spectrum& data) const {
  fftw_execute_dft(plans_->backward, as_fftw(data.data()), as_fftw(data.data()));
}

// The half spectrum keeps last-axis indices 0..N/2 of the row-major full spectrum.
void Simulator::to_physical(const Spectrum& hat, std::vector<double>& out) const {
  thread_local Spectrum half;
  half.resize(half_size_);
  const std::size_t N = static_cast<std::size_t>(grid_.N), nh = N / 2 + 1, rows = hat.size() / N;
  for (std::size_t r = 0; r < rows; ++r)
    std::copy_n(hat.begin() + static_cast<std::ptrdiff_t>(r * N), nh, half.begin() + static_cast<std::ptrdiff_t>(r * nh));
  out.resize(hat.size());
  fftw_execute_dft_c2r(plans_->c2r, as_fftw(half.data()), out.data());
}

void Simulator::to_spectrum(std::vector<double>& in, Spectrum& out) const {
  thread_local Spectrum half;
  half.resize(half_size_);
  fftw_execute_dft_r2c(plans_->r2c, in.data(), as_fftw(half.data()));
  const std::size_t N = static_cast<std::size_t>(grid_.N), nh = N / 2 + 1, n = in.size(), rows = n / N;
  const double inv = 1.0 / static_cast<double>(n);
  out.resize(n);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < nh; ++j) out[r * N + j] = inv * half[r * nh + j];
  const auto& mirrors = noise_.mirrors;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = nh; j < N; ++j) out[r * N + j] = std::conj(out[mirrors[r * N + j]]);
}

std::vector<double> Simulator::physical(const Spectrum& hat) const {
  std::vector<double> out;
  to_physical(hat, out);
  return out;
}

double Simulator::realness_defect(const FieldState& state) const {
  Spectrum tmp = state.u_hat;
  fft_backward(tmp);
  double im = 0.0, re = 0.0;
  for (const auto& c : tmp) {
    im = std::max(im, std::abs(c.imag()));
    re = std::max(re, std::abs(c.real()));
  }
  return re > 0.0 ? im / re : im;
}

void Simulator::frozen_injection(double sigma, double drift, const Spectrum& noise_hat, Spectrum& noise_inj,
                                 Spectrum& drift_inj) const {
  noise_inj.resize(noise_hat.size());
  for (std::size_t f = 0; f < noise_hat.size(); ++f) noise_inj[f] = sigma * noise_hat[f];
  if (drift == 0.0) {
    drift_inj.clear();
  } else {
    drift_inj.assign(noise_hat.size(), {0.0, 0.0});
    drift_inj[0] = drift * dt_;
  }
}

void Simulator::injection(const FieldState& state, const Spectrum& noise_hat, Spectrum& noise_inj,
                          Spectrum& drift_inj) const {
  if (sigma_const_ && drift_const_) {
    frozen_injection(model_.sigma.constant_value, model_.b.constant_value, noise_hat, noise_inj, drift_inj);
    return;
  }
  const std::size_t n = noise_hat.size();
  thread_local std::vector<double> u_phys, work;
  to_physical(state.u_hat, u_phys);

  if (sigma_const_) {
    noise_inj.resize(n);
    for (std::size_t f = 0; f < n; ++f) noise_inj[f] = model_.sigma.constant_value * noise_hat[f];
  } else {
    to_physical(noise_hat, work);
    for (std::size_t i = 0; i < n; ++i) work[i] *= model_.sigma(u_phys[i]);
    to_spectrum(work, noise_inj);
  }

  if (drift_zero_) {
    drift_inj.clear();
  } else if (drift_const_) {
    drift_inj.assign(n, {0.0, 0.0});
    drift_inj[0] = model_.b.constant_value * dt_;
  } else {
    work.resize(n);
    for (std::size_t i = 0; i < n; ++i) work[i] = model_.b(u_phys[i]) * dt_;
    to_spectrum(work, drift_inj);
  }
}

void Simulator::advance(FieldState& state, const Spectrum* noise_inj, const Spectrum* drift_inj) const {
  const std::size_t n = state.u_hat.size();
  const bool has_noise = noise_inj && !noise_inj->empty();
  const bool has_drift = drift_inj && !drift_inj->empty();
  if (model_.kernel.family() == KernelFamily::Wave) {
    for (std::size_t f = 0; f < n; ++f) {
      const auto u = state.u_hat[f], v = state.v_hat[f];
      auto nu = cos_[f] * u + sin_over_[f] * v;
      auto nv = neg_w_sin_[f] * u + cos_[f] * v;
      if (has_noise) {
        nu += inj_u_[f] * (*noise_inj)[f];
        nv += inj_v_[f] * (*noise_inj)[f];
      }
      if (has_drift) {
        nu += drift_u_[f] * (*drift_inj)[f];
        nv += drift_v_[f] * (*drift_inj)[f];
      }
      state.u_hat[f] = nu;
      state.v_hat[f] = nv;
    }
  } else {
    for (std::size_t f = 0; f < n; ++f) {
      auto nu = cos_[f] * state.u_hat[f];
      if (has_noise) nu += inj_u_[f] * (*noise_inj)[f];
      if (has_drift) nu += drift_u_[f] * (*drift_inj)[f];
      state.u_hat[f] = nu;
    }
  }
  state.time += dt_;
}

bool Simulator::step(FieldState& state, const Spectrum& noise_hat) const {
  thread_local Spectrum fn, fd;
  injection(state, noise_hat, fn, fd);
  advance(state, &fn, &fd);
  for (const auto& c : state.u_hat)
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) return false;
  return true;
}

namespace {

void require_stable(bool ok, double time) {
  if (!ok) throw InstabilityError("simulator: non-finite state at t = " + std::to_string(time));
}

}  // namespace

double Simulator::run(double t, std::uint64_t seed) const {
  const int n = steps_to(t);
  ReplicaRng rng(seed);
  FieldState state = zero_state();
  Spectrum noise;
  for (int j = 0; j < n; ++j) {
    synthesize_into(noise_, dt_, rng, noise);
    require_stable(step(state, noise), state.time);
  }
  return state.value_at_origin();
}

std::vector<double> Simulator::run_recording(std::span<const int> steps, std::uint64_t seed) const {
  std::vector<double> out;
  out.reserve(steps.size());
  if (steps.empty()) return out;
  for (std::size_t i = 1; i < steps.size(); ++i)
    if (steps[i] < steps[i - 1]) throw DomainError("run_recording: steps must be ascending");
  ReplicaRng rng(seed);
  FieldState state = zero_state();
  Spectrum noise;
  std::size_t next = 0;
  for (int j = 0; next < steps.size(); ++j) {
    while (next < steps.size() && steps[next] == j) {
      out.push_back(state.value_at_origin());
      ++next;
    }
    if (next == steps.size()) break;
    synthesize_into(noise_, dt_, rng, noise);
    require_stable(step(state, noise), state.time);
  }
  return out;
}

std::vector<double> Simulator::smoothing_branches(double t, std::span<const double> eps_grid, std::uint64_t seed,
                                                  double& u_t) const {
  const int n = steps_to(t);
  std::vector<int> branch_at;
  for (double eps : eps_grid) {
    if (!(eps >= 0.0) || eps > t * (1.0 + 1e-12)) throw DomainError("smoothing: eps must lie in [0, t]");
    branch_at.push_back(n - steps_to(eps));
  }
  struct Branch {
    FieldState state;
    double sigma = 0.0, drift = 0.0;
    bool active = false;
  };
  std::vector<Branch> branches(eps_grid.size());
  ReplicaRng rng(seed);
  FieldState state = zero_state();
  Spectrum noise, fn, fd;
  auto open_branches = [&](int j) {
    for (std::size_t i = 0; i < branches.size(); ++i) {
      if (branch_at[i] != j) continue;
      const double u0 = state.value_at_origin();
      branches[i].state = state;
      branches[i].sigma = model_.sigma(u0);
      branches[i].drift = model_.b(u0);
      branches[i].active = true;
    }
  };
  for (int j = 0; j < n; ++j) {
    open_branches(j);
    synthesize_into(noise_, dt_, rng, noise);
    for (auto& br : branches) {
      if (!br.active) continue;
      frozen_injection(br.sigma, br.drift, noise, fn, fd);
      advance(br.state, &fn, &fd);
    }
    require_stable(step(state, noise), state.time);
  }
  open_branches(n);
  u_t = state.value_at_origin();
  std::vector<double> out;
  for (const auto& br : branches) out.push_back(br.state.value_at_origin());
  return out;
}

ReplicaResult Simulator::smoothing_pair(double t, double eps, std::uint64_t seed) const {
  ReplicaResult r;
  r.seed = seed;
  const double e[] = {eps};
  r.u_eps_t0 = smoothing_branches(t, e, seed, r.u_t0).front();
  return r;
}

double Simulator::lattice_variance(double t) const {
  const int n = steps_to(t);
  const bool wave = model_.kernel.family() == KernelFamily::Wave;
  double total = 0.0;
  for (std::size_t f = 0; f < noise_.weights.size(); ++f) {
    const double w2 = noise_.weights[f] * noise_.weights[f];
    if (w2 == 0.0) continue;
    const double om = grid_.frequency_norm(f);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      double a;
      if (wave) {
        const double tau = t - (j + 0.5) * dt_;
        a = om == 0.0 ? tau : std::sin(om * tau) / om;
      } else {
        a = inj_u_[f] * std::exp(-kFourPiSq * om * om * (t - (j + 1) * dt_));
      }
      sum += a * a;
    }
    total += w2 * dt_ * sum;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Drivers

double simulate_at_origin(const ModelSpec& model, const LatticeGrid& grid, double dt, double t, std::uint64_t seed) {
  if (!(t > 0.0) || t > model.T * (1.0 + 1e-12)) throw DomainError("simulate_at_origin: t must lie in (0, T]");
  return Simulator(model, grid, dt).run(t, seed);
}

std::vector<double> simulate_replicas(const Simulator& sim, double t, std::size_t replicas, std::uint64_t base_seed,
                                      int threads) {
  sim.steps_to(t);
  std::vector<double> out(replicas);
  parallel_for(replicas, threads, [&](std::size_t i) { out[i] = sim.run(t, base_seed + i); });
  return out;
}

namespace {

void require_linear(double sigma1, const ModelSpec& model) {
  const bool linear = model.sigma.is_constant && model.b.is_constant && model.b.constant_value == 0.0 &&
                      model.sigma.constant_value == sigma1;
  if (!linear)
    throw DomainError("simulate_linear_exact: the model must have sigma == sigma1 constant and b == 0");
}

}  // namespace

std::vector<double> linear_exact_samples(double sigma1, const ModelSpec& model, double t, std::size_t n,
                                         std::uint64_t seed, const QuadratureConfig& cfg) {
  require_linear(sigma1, model);
  const auto g = compute_g(model, cfg, t);
  if (g.diverged) throw DomainError("simulate_linear_exact: g(t) diverges for this model");
  const double sd = std::abs(sigma1) * std::sqrt(g.value);
  ReplicaRng rng(seed);
  std::vector<double> out(n);
  for (auto& x : out) x = sd * rng.normal();
  return out;
}

double simulate_linear_exact(double sigma1, const ModelSpec& model, double t, std::uint64_t seed,
                             const QuadratureConfig& cfg) {
  return linear_exact_samples(sigma1, model, t, 1, seed, cfg).front();
}

ReplicaResult smoothing_pair(const ModelSpec& model, const LatticeGrid& grid, double dt, double t, double eps,
                             std::uint64_t seed) {
  if (!(t > 0.0) || t > model.T * (1.0 + 1e-12)) throw DomainError("smoothing_pair: t must lie in (0, T]");
  return Simulator(model, grid, dt).smoothing_pair(t, eps, seed);
}

std::vector<SmoothingRow> smoothing_errors(const Simulator& sim, double t, std::span<const double> eps_grid,
                                           std::size_t replicas, std::uint64_t base_seed, int threads) {
  const std::size_t m = eps_grid.size();
  std::vector<double> sq(replicas * m);
  parallel_for(replicas, threads, [&](std::size_t i) {
    double u = 0.0;
    const auto ue = sim.smoothing_branches(t, eps_grid, base_seed + i, u);
    for (std::size_t k = 0; k < m; ++k) sq[i * m + k] = (u - ue[k]) * (u - ue[k]);
  });
  std::vector<SmoothingRow> rows(m);
  std::vector<double> col(replicas);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < replicas; ++i) col[i] = sq[i * m + k];
    rows[k].eps = eps_grid[k];
    rows[k].error = moment_of(col);
  }
  return rows;
}

std::vector<LagMoment> increment_moments(const Simulator& sim, double s, std::span<const double> lags,
                                         std::size_t replicas, std::uint64_t base_seed, int threads) {
  const int s_steps = sim.steps_to(s);
  std::vector<int> steps{s_steps};
  for (double lag : lags) {
    if (!(lag >= 0.0)) throw DomainError("increment_moments: lags must be >= 0");
    steps.push_back(s_steps + sim.steps_to(lag));
  }
  std::vector<int> sorted = steps;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.back() > sim.steps_to(sim.model().T)) throw DomainError("increment_moments: s + lag exceeds T");
  const std::size_t m = lags.size();
  std::vector<double> sq(replicas * m);
  parallel_for(replicas, threads, [&](std::size_t i) {
    const auto rec = sim.run_recording(sorted, base_seed + i);
    auto at = [&](int step) {
      return rec[static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), step) - sorted.begin())];
    };
    const double us = at(s_steps);
    for (std::size_t k = 0; k < m; ++k) {
      const double diff = at(steps[k + 1]) - us;
      sq[i * m + k] = diff * diff;
    }
  });
  std::vector<LagMoment> out(m);
  std::vector<double> col(replicas);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < replicas; ++i) col[i] = sq[i * m + k];
    out[k].lag = lags[k];
    out[k].moment = moment_of(col);
  }
  return out;
}

MomentEstimate increment_moment(const ModelSpec& model, const LatticeGrid& grid, double dt, double s, double t,
                                std::size_t replicas, std::uint64_t seed) {
  if (!(s >= 0.0) || !(t >= s) || t > model.T * (1.0 + 1e-12))
    throw DomainError("increment_moment: need 0 <= s <= t <= T");
  Simulator sim(model, grid, dt);
  const double lag[] = {t - s};
  return increment_moments(sim, s, lag, replicas, seed).front().moment;
}

IsometryReport isometry_check(const Simulator& sim, double t, std::size_t replicas, std::uint64_t base_seed,
                              const QuadratureConfig& cfg, int threads) {
  const int n = sim.steps_to(t);
  const double dt = sim.dt();
  const ModelSpec& model = sim.model();
  IsometryReport rep;
  if (n == 0) {
    rep.stochastic_holds = rep.drift_holds = true;
    return rep;
  }
  // per-replica: S(t,0)^2, D(t,0)^2 and sigma^2, b^2 at each left endpoint
  std::vector<double> s_sq(replicas), d_sq(replicas);
  std::vector<double> sig2(replicas * static_cast<std::size_t>(n)), b2(replicas * static_cast<std::size_t>(n));
  parallel_for(replicas, threads, [&](std::size_t i) {
    ReplicaRng rng(base_seed + i);
    FieldState u = sim.zero_state(), S = sim.zero_state(), D = sim.zero_state();
    Spectrum noise, fn, fd;
    for (int j = 0; j < n; ++j) {
      const double u0 = u.value_at_origin();
      const double sv = model.sigma(u0), bv = model.b(u0);
      sig2[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = sv * sv;
      b2[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = bv * bv;
      synthesize_into(sim.noise(), dt, rng, noise);
      sim.injection(u, noise, fn, fd);
      sim.advance(u, &fn, &fd);
      sim.advance(S, &fn, nullptr);
      sim.advance(D, nullptr, &fd);
      require_stable(std::isfinite(u.value_at_origin()), u.time);
    }
    s_sq[i] = S.value_at_origin() * S.value_at_origin();
    d_sq[i] = D.value_at_origin() * D.value_at_origin();
  });
  rep.stochastic = moment_of(s_sq);
  rep.drift = moment_of(d_sq);

  // kernel factors on the lag grid tau_j = j dt
  ModelSpec horizon = model;
  horizon.T = std::max(model.T, t);
  std::vector<double> taus(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) taus[static_cast<std::size_t>(j)] = (j + 1) * dt;
  const auto tab = compute_functionals(horizon, cfg, taus);
  auto g1_at = [&](int k) { return k == 0 ? 0.0 : tab.g1[static_cast<std::size_t>(k - 1)]; };
  auto g2_at = [&](int k) { return k == 0 ? 0.0 : tab.g2[static_cast<std::size_t>(k - 1)]; };
  for (int j = 0; j < n; ++j) {
    double es = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < replicas; ++i) {
      es += sig2[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
      eb += b2[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)];
    }
    es /= static_cast<double>(std::max<std::size_t>(replicas, 1));
    eb /= static_cast<double>(std::max<std::size_t>(replicas, 1));
    // s in [j dt, (j+1) dt] means t - s in [(n-j-1) dt, (n-j) dt]
    rep.stochastic_bound += es * (g1_at(n - j) - g1_at(n - j - 1));
    rep.drift_bound += eb * (g2_at(n - j) - g2_at(n - j - 1));
  }
  rep.stochastic_holds = rep.stochastic.mean <= rep.stochastic_bound + 3.0 * rep.stochastic.standard_error;
  rep.drift_holds = rep.drift.mean <= rep.drift_bound + 3.0 * rep.drift.standard_error;
  return rep;
}

std::vector<double> synthesize_increment(const NoiseSynth& noise, double dt, ReplicaRng& rng) {
  const Spectrum hat = synthesize_increment_hat(noise, dt, rng);
  const std::size_t n = hat.size();
  Spectrum tmp = hat;
  std::array<int, 3> dims{noise.grid.N, noise.grid.N, noise.grid.N};
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft(noise.grid.d, dims.data(), as_fftw(tmp.data()), as_fftw(tmp.data()), FFTW_BACKWARD,
                         FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = tmp[i].real();
  return out;
}

}  // namespace spdens
