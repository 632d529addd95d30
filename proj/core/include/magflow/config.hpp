#pragma once

// JSON run configuration: the fixture (base, metric, magnetic form) plus
// per-subcommand sections. See README.md for the key schema.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magflow/dynamics.hpp"
#include "magflow/orbit.hpp"
#include "magflow/resonance.hpp"

namespace magflow {

struct Fixture {
  std::string name;
  BaseManifold base;
  MetricField metric;
  MagneticForm magnetic;
  nlohmann::json metric_spec;
  nlohmann::json magnetic_spec;
  std::vector<int> grid;  ///< spectrum grid counts per axis
  ResonanceOptions resonance;
  WilliamsonOptions williamson;

  TwistedPhaseSpace space() const { return {base, metric, magnetic}; }
};

struct WilliamsonRunConfig {
  enum class Mode { random, fibre, matrix };
  Mode mode = Mode::random;
  std::vector<int> dimensions{2, 4, 6, 8};  ///< phase dimensions 2p
  int instances = 100;
  double tolerance = 1e-10;
  /// Random suites draw A = M M^T + shift * I.
  double spd_shift = 0.5;
  Matrix omega;  ///< matrix mode; empty = standard J
  Matrix form;   ///< matrix mode
};

struct ConvergeRunConfig {
  std::vector<double> epsilons{0.2, 0.1, 0.05, 0.025};
  std::size_t samples = 256;
  double fibre_radius = 1.0;
  double max_ratio = 0.6;
  double epsilon_max = 0.5;
  bool inverse_square_clock = false;
  /// Sanity row: gap at this eps must be positive (0 disables).
  double sanity_epsilon = 1.0;
};

struct SimulateRunConfig {
  PhaseState start;
  double duration = 1.0;
  IntegratorConfig integrator;
};

struct RunConfig {
  Fixture fixture;
  nlohmann::json raw;
  std::filesystem::path source;
  std::optional<WilliamsonRunConfig> williamson;
  std::optional<ConvergeRunConfig> converge;
  std::optional<SimulateRunConfig> simulate;
  std::optional<CensusConfig> census;
  unsigned jobs = 1;
  std::uint64_t seed = 1;
};

/// Throws ConfigError on malformed or inconsistent documents.
Fixture parse_fixture(const nlohmann::json& doc);
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace magflow
