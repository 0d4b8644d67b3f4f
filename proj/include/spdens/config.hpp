#pragma once

// Declarative experiment configuration (JSON), validated before any computation.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spdens/hypothesis_verifier.hpp"
#include "spdens/spde_simulator.hpp"

namespace spdens {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SimulationConfig {
  LatticeGrid grid;
  double dt = 1.0 / 32;
  /// Observation time; defaults to model T.
  double t = 0.0;
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  /// Smoothing parameter for the u^eps column.
  std::optional<double> eps;
  /// Increment moments E[(u(s + lag) - u(s))^2].
  std::optional<double> increment_s;
  std::vector<double> lags;
};

struct AnalysisConfig {
  int n = 2;
  double alpha = 2.0 / 3.0;
  std::vector<double> s_grid;
  /// Besov h-grid, snapped to multiples of the density grid step.
  std::vector<double> h_grid;
  /// h-grid for criterion_decay and master_bound_check.
  std::vector<double> decay_h_grid;
  std::vector<double> eps_grid;
  std::optional<std::pair<double, double>> eps_rule;  // (rho, gamma)
  /// density exits 0 iff s_empirical >= fraction * s_max.
  double fraction = 0.8;
  /// Replicas for master_bound_check; 0 skips it.
  std::size_t master_replicas = 0;
  double exponent_tolerance = 0.05;
  std::vector<double> a3_h_grid;
};

struct ExperimentConfig {
  ModelSpec model;
  QuadratureConfig quadrature;
  SimulationConfig simulation;
  AnalysisConfig analysis;
  std::string output_dir = "out";
  /// The validated input, used for hashing.
  nlohmann::json source;
};

ModelSpec parse_model(const nlohmann::json& j);
ExperimentConfig parse_config(const nlohmann::json& j);
/// Reads and parses a JSON file; throws ConfigError on I/O or schema problems.
ExperimentConfig load_config(const std::string& path);

/// Library and dependency versions for manifests.
nlohmann::json version_info();

}  // namespace spdens
