#pragma once

// Periodic-orbit search on low energy levels {H = eps^2}: seeding from the
// invariant sphere bundles of the limiting flow, Newton shooting, geometric
// deduplication, the loop 1-form residual and the census driver.

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "magflow/dynamics.hpp"
#include "magflow/predictions.hpp"

namespace magflow {

struct SeedSet {
  int class_index = 0;
  double epsilon = 0.0;
  double energy = 0.0;  ///< eps^2
  std::vector<PhaseState> seeds;
  /// Limiting period of the class at each seed's base point (unrescaled time).
  std::vector<double> predicted_periods;
  /// Fibre coordinate a (on the complement) of each seed before dilation,
  /// normalized to d^2_N H = 1.
  std::vector<Vector> fibre_directions;
};

/// Smallest common period of the limiting oscillations pi / a_i of a class.
/// Falls back to pi / min(a) when the ratios are not integral within rel_tol.
double class_period(const Vector& eigenvalues, const std::vector<int>& members, double rel_tol = 1e-6);

/// n_base points per base axis times n_fibre points per angle of the class
/// sphere S^{2k-1}, dilated onto {H = eps^2}.
SeedSet seed_from_limit(const TwistedPhaseSpace& space, const ResonancePartition& partition, int class_index,
                        double epsilon, int n_base, int n_fibre);

struct ShootingConfig {
  double tol = 1e-9;              ///< on |phi_T(x) - x|
  double energy_tol = 1e-10;      ///< on |H(x) - E| at acceptance
  double seed_level_tol = 1e-6;   ///< relative; seeds further off-level are rejected
  int max_iter = 30;
  double fd_scale = 1e-6;
  int steps = 1024;               ///< RK4 steps per period, a multiple of loop_nodes
  int loop_nodes = 128;
  double period_min = 0.0;
  double period_max = 0.0;        ///< 0 disables the upper window edge
  double floquet_tol = 1e-3;
  /// Re-anchor the time-translation condition at the current iterate each
  /// step instead of keeping it at the seed.
  bool moving_anchor = true;
  /// Period-only corrections applied to each line-search trial.
  int period_refinements = 1;
};

struct OrbitRecord {
  PhaseState representative;
  double period = 0.0;
  double energy = 0.0;
  double newton_residual = 0.0;
  int iterations = 0;
  std::vector<std::complex<double>> floquet;
  double ds_residual = 0.0;
  /// loop_nodes states over one period in unwrapped coordinates.
  std::vector<Vector> loop;
  std::size_t seed_index = 0;
  int class_index = 0;
  double epsilon = 0.0;

  double diameter(const BaseManifold& base) const;
  /// min |mu - 1| over the Floquet multipliers.
  double floquet_distance_to_one() const;
};

struct OrbitResult {
  std::optional<OrbitRecord> orbit;
  std::string rejection;  ///< empty when accepted
  double residual = 0.0;
  int iterations = 0;
  double period = 0.0;

  bool accepted() const noexcept { return orbit.has_value(); }
};

OrbitResult find_orbit(const TwistedPhaseSpace& space, const PhaseState& seed, double energy_level, double t_guess,
                       const ShootingConfig& config = {});

/// Monodromy matrix d phi_T at x by forward differences.
Matrix monodromy(const TwistedPhaseSpace& space, const Vector& x, double period, int steps, double fd_scale);

/// Phase-space distance from x to the closed polyline through `loop`, with
/// base components compared modulo the period lattice.
double distance_to_loop(const BaseManifold& base, const Vector& x, const std::vector<Vector>& loop);

struct DedupConfig {
  double tol_geom_factor = 0.1;  ///< times the smaller orbit diameter
  double period_rel_tol = 1e-4;
  int max_multiple = 8;
};

/// Union of the "one lies on the other" relation; each component keeps the
/// record with the smallest residual. Output is sorted canonically.
std::vector<OrbitRecord> deduplicate(const std::vector<OrbitRecord>& orbits, const BaseManifold& base,
                                     const DedupConfig& config = {});

/// max over random level-tangent variations xi of |loop integral Omega(gamma', xi) dt|.
double ds_residual(const TwistedPhaseSpace& space, const std::vector<Vector>& loop, double period,
                   int n_variations, std::uint64_t seed = 7, int modes = 3);
double ds_residual(const TwistedPhaseSpace& space, const OrbitRecord& orbit, int n_variations,
                   std::uint64_t seed = 7);

/// |phi_T(x) - x| recomputed through integrate() with the orbit's step size.
double closure_error(const TwistedPhaseSpace& space, const OrbitRecord& orbit, int steps);

struct CensusConfig {
  std::vector<double> epsilons;
  int n_base = 8;
  int n_fibre = 8;
  ShootingConfig shooting;
  DedupConfig dedup;
  double window = 0.5;                 ///< period window +-50% around limiting periods
  double convergence_threshold = 0.9;
  double ds_threshold = 1e-6;
  int ds_variations = 4;
  double negative_control_shift = 0.1;
  unsigned jobs = 1;
  std::uint64_t seed = 7;
  std::vector<int> classes;            ///< empty = all classes
};

struct OrbitValidity {
  double closure = 0.0;
  double energy_error = 0.0;
  double floquet_distance = 0.0;
  double ds = 0.0;
  double ds_negative = 0.0;
  bool closure_ok = false;
  bool energy_ok = false;
  bool floquet_ok = false;
  bool ds_ok = false;
  bool negative_ok = false;

  bool ok() const noexcept { return closure_ok && energy_ok && floquet_ok && ds_ok && negative_ok; }
};

OrbitValidity check_orbit(const TwistedPhaseSpace& space, const OrbitRecord& orbit, double energy_level,
                          const CensusConfig& config);

struct CensusRow {
  double epsilon = 0.0;
  std::size_t seeds = 0;
  std::size_t converged = 0;
  std::size_t distinct = 0;
  int bound = 0;
  bool pass = false;
  double convergence_rate = 0.0;
  double period_min = 0.0;
  double period_max = 0.0;
  std::map<std::string, std::size_t> rejections;
  std::vector<OrbitRecord> orbits;  ///< distinct orbits
  std::size_t valid = 0;            ///< accepted orbits passing check_orbit
  double max_ds = 0.0;
  double min_negative_ds = 0.0;
  double wall_seconds = 0.0;
};

struct OrbitCensus {
  std::vector<CensusRow> rows;
  BoundReport bounds;
  ResonancePartition partition;
  /// Smallest eps whose convergence rate reaches the threshold.
  std::optional<std::size_t> headline;
  bool validity_ok = true;

  bool pass() const { return headline.has_value() && rows[*headline].pass && validity_ok; }
};

OrbitCensus orbit_census(const TwistedPhaseSpace& space, const CensusConfig& config,
                         const ResonanceOptions& resonance = {});

}  // namespace magflow
