#pragma once

// Monte Carlo for the mild solution on a periodic lattice. Fourier
// coefficients use the convention u(x) = sum_k u_hat[k] exp(i xi_k . x) with
// angular frequencies xi_k = 2 pi k / L, so u(t, 0) = Re sum_k u_hat[k].

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/random/normal_distribution.hpp>

#include "spdens/hypothesis_verifier.hpp"
#include "spdens/spectral_kernels.hpp"

namespace spdens {

class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LatticeGrid {
  int d = 2;
  int N = 64;
  double L = 8.0;
  /// Upper bound on N^d.
  std::size_t memory_budget = std::size_t{1} << 22;

  std::size_t size() const;
  void validate() const;
  /// Angular frequency of FFT index j along one axis.
  double frequency(int j) const;
  /// Multi-index of flat position `flat` (row-major, last axis fastest).
  std::array<int, 3> index(std::size_t flat) const;
  /// Flat position of the mode -k.
  std::size_t mirror(std::size_t flat) const;
  double frequency_norm(std::size_t flat) const;
};

/// Per-replica random stream: mt19937_64 keyed by the replica seed through
/// seed_seq, with ziggurat normals.
class ReplicaRng {
 public:
  explicit ReplicaRng(std::uint64_t seed);
  double normal() { return normal_(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  boost::random::normal_distribution<double> normal_;
};

using Spectrum = std::vector<std::complex<double>>;

struct NoiseSynth {
  LatticeGrid grid;
  /// w_k with w_k^2 = mu(cell around xi_k).
  std::vector<double> weights;
  /// Flat position of -k for every k.
  std::vector<std::size_t> mirrors;

  /// Riesz: exact cell masses (the origin cell included); atoms: mass split
  /// between the cells of xi and -xi; radial densities: tensor quadrature per cell.
  static NoiseSynth from_measure(const LatticeGrid& grid, const SpectralMeasure& mu);
  /// Covariance of the synthesized field between two sites at integer lattice lag.
  double covariance_at_lag(std::span<const int> lag) const;
};

/// Hermitian Fourier coefficients w_k sqrt(dt) Z_k of one noise increment.
Spectrum synthesize_increment_hat(const NoiseSynth& noise, double dt, ReplicaRng& rng);
/// The same increment in physical space.
std::vector<double> synthesize_increment(const NoiseSynth& noise, double dt, ReplicaRng& rng);

struct FieldState {
  double time = 0.0;
  Spectrum u_hat;
  /// Velocity coefficients, Wave only.
  Spectrum v_hat;

  double value_at_origin() const;
};

struct ReplicaResult {
  double u_t0 = 0.0;
  std::optional<double> u_eps_t0;
  std::uint64_t seed = 0;
};

struct MomentEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t count = 0;
};

MomentEstimate moment_of(std::span<const double> values);

/// Exact-propagator scheme for one model on one lattice with a fixed time step.
/// Immutable after construction and safe to share between threads.
class Simulator {
 public:
  Simulator(const ModelSpec& model, const LatticeGrid& grid, double dt);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  const ModelSpec& model() const { return model_; }
  const LatticeGrid& grid() const { return grid_; }
  const NoiseSynth& noise() const { return noise_; }
  double dt() const { return dt_; }
  /// Number of steps to reach t; throws unless t / dt is an integer.
  int steps_to(double t) const;

  FieldState zero_state() const;

  /// Fourier coefficients of sigma(u) W and b(u) dt. The drift spectrum is
  /// left empty when b == 0.
  void injection(const FieldState& state, const Spectrum& noise_hat, Spectrum& noise_inj,
                 Spectrum& drift_inj) const;
  /// Frozen coefficients: sigma W and b dt with given constants.
  void frozen_injection(double sigma, double drift, const Spectrum& noise_hat, Spectrum& noise_inj,
                        Spectrum& drift_inj) const;
  /// Free propagation over dt plus the Duhamel injections.
  void advance(FieldState& state, const Spectrum* noise_inj, const Spectrum* drift_inj) const;
  /// One full step; returns false if the state became non-finite.
  bool step(FieldState& state, const Spectrum& noise_hat) const;

  /// Physical-space field of a spectrum.
  std::vector<double> physical(const Spectrum& hat) const;
  /// max |Im| / max |Re| of the inverse transform of u_hat.
  double realness_defect(const FieldState& state) const;

  /// u(t, 0) from zero initial data with the stream of `seed`.
  double run(double t, std::uint64_t seed) const;
  /// u at the origin after each of the given step counts (ascending), one path.
  std::vector<double> run_recording(std::span<const int> steps, std::uint64_t seed) const;
  ReplicaResult smoothing_pair(double t, double eps, std::uint64_t seed) const;
  /// u(t,0) and u^eps(t,0) for every eps on one path (frozen branches share the noise).
  std::vector<double> smoothing_branches(double t, std::span<const double> eps_grid, std::uint64_t seed,
                                         double& u_t) const;

  /// Discrete analogue of g(t): Var u(t, 0) for sigma == 1, b == 0.
  double lattice_variance(double t) const;

 private:
  struct Plans;
  ModelSpec model_;
  LatticeGrid grid_;
  double dt_;
  NoiseSynth noise_;
  bool sigma_const_, drift_zero_, drift_const_;
  // per-mode propagator and injection factors
  std::vector<double> cos_, sin_over_, neg_w_sin_;      // wave free flow
  std::vector<double> inj_u_, inj_v_;                   // noise injection
  std::vector<double> drift_u_, drift_v_;               // drift injection
  std::unique_ptr<Plans> plans_;
  std::size_t half_size_;
  void fft_backward(Spectrum& data) const;
  // real transforms of Hermitian spectra
  void to_physical(const Spectrum& hat, std::vector<double>& out) const;
  void to_spectrum(std::vector<double>& in, Spectrum& out) const;
};

double simulate_at_origin(const ModelSpec& model, const LatticeGrid& grid, double dt, double t,
                          std::uint64_t seed);

/// Replica seeds are base_seed + i; results are ordered by i for any thread count.
std::vector<double> simulate_replicas(const Simulator& sim, double t, std::size_t replicas,
                                      std::uint64_t base_seed, int threads = 1);

/// One draw from N(0, sigma1^2 g(t)).
double simulate_linear_exact(double sigma1, const ModelSpec& model, double t, std::uint64_t seed,
                             const QuadratureConfig& cfg = {});
/// n draws from one stream with g(t) computed once.
std::vector<double> linear_exact_samples(double sigma1, const ModelSpec& model, double t, std::size_t n,
                                         std::uint64_t seed, const QuadratureConfig& cfg = {});

ReplicaResult smoothing_pair(const ModelSpec& model, const LatticeGrid& grid, double dt, double t,
                             double eps, std::uint64_t seed);

struct SmoothingRow {
  double eps = 0.0;
  MomentEstimate error;  // E[(u - u^eps)^2]
};

std::vector<SmoothingRow> smoothing_errors(const Simulator& sim, double t, std::span<const double> eps_grid,
                                           std::size_t replicas, std::uint64_t base_seed, int threads = 1);

MomentEstimate increment_moment(const ModelSpec& model, const LatticeGrid& grid, double dt, double s, double t,
                                std::size_t replicas, std::uint64_t seed);

struct LagMoment {
  double lag = 0.0;
  MomentEstimate moment;
};

/// E[(u(s + lag, 0) - u(s, 0))^2] for every lag, all from the same paths.
std::vector<LagMoment> increment_moments(const Simulator& sim, double s, std::span<const double> lags,
                                             std::size_t replicas, std::uint64_t base_seed, int threads = 1);

struct IsometryReport {
  MomentEstimate stochastic;  // E[(stochastic integral)^2]
  double stochastic_bound = 0.0;
  MomentEstimate drift;       // E[(drift integral)^2]
  double drift_bound = 0.0;
  bool stochastic_holds = false;
  bool drift_holds = false;
};

/// Monte Carlo second moments of the two Duhamel terms against the right sides
/// of the isometry estimates, with E[sigma(u(s,0))^2], E[b(u(s,0))^2] sampled on
/// the step grid and the kernel factors integrated by quadrature.
IsometryReport isometry_check(const Simulator& sim, double t, std::size_t replicas, std::uint64_t base_seed,
                              const QuadratureConfig& cfg = {}, int threads = 1);

}  // namespace spdens
