#pragma once

// Hamiltonian vector field of the twisted phase space, trajectory
// integration, the fibrewise rescaling and the limiting fibre flow.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "magflow/phase_space.hpp"

namespace magflow {

/// A point of T*M at time t. Phase vectors are stacked as x = (q, p).
struct PhaseState {
  Vector q;
  Vector p;
  double t = 0.0;

  Vector packed() const;
  static PhaseState unpack(const Vector& x, double t = 0.0);
};

/// Solution X = (q', p') of Omega(q) X = grad H:
///   q' = g^{-1} p,   p' = omega(q) q' - dH/dq.
Vector hamiltonian_field(const TwistedPhaseSpace& space, const Vector& q, const Vector& p);
Vector hamiltonian_field(const TwistedPhaseSpace& space, const Vector& x);

enum class IntegratorMethod { rk4, dopri5 };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::rk4;
  double step = 1e-3;           ///< RK4 step; output spacing for dopri5
  double abs_tol = 1e-12;       ///< dopri5 only
  double rel_tol = 1e-12;       ///< dopri5 only
  double drift_bound = 1e-6;    ///< |H(t) - H(0)| above this flags the trajectory
  std::size_t sample_every = 1; ///< keep every k-th RK4 step
};

struct Trajectory {
  std::vector<PhaseState> states;  ///< q wrapped into the chart
  std::vector<double> energy;
  std::string method;
  double step = 0.0;
  double wall_seconds = 0.0;
  bool drift_flagged = false;
  bool truncated = false;
  std::string error;

  double max_drift() const;
};

/// Integrates from `start` over [start.t, start.t + duration].
Trajectory integrate(const TwistedPhaseSpace& space, const PhaseState& start, double duration,
                     const IntegratorConfig& config = {});

/// Time-`duration` RK4 flow map in unwrapped coordinates with exactly
/// `steps` equal steps. Negative durations integrate backwards.
Vector flow(const TwistedPhaseSpace& space, const Vector& x, double duration, int steps);

/// Same as flow() but keeps all steps + 1 nodes.
std::vector<Vector> flow_nodes(const TwistedPhaseSpace& space, const Vector& x, double duration, int steps);

/// CSV rows (t, q..., p..., H) preceded by `# ` + the JSON header on one line.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const nlohmann::json& header);

/// Fibrewise dilation p = epsilon * y.
struct RescaleConfig {
  double epsilon = 0.1;
  double epsilon_max = 0.5;
  /// When set, X1 = eps^{-2} Phi^{-1}_* X_H (rescaled clock). By default
  /// X1 = Phi^{-1}_* X_H, the field solving i_{X1} (eps^{-2} Phi^* Omega) =
  /// d(eps^{-2} Phi^* H); only this choice has an eps -> 0 limit.
  bool inverse_square_clock = false;

  void validate() const;
  double clock() const { return inverse_square_clock ? 1.0 / (epsilon * epsilon) : 1.0; }
};

/// X1 at (q, y), stacked (q', y').
Vector rescaled_field(const TwistedPhaseSpace& space, const RescaleConfig& cfg, const Vector& q,
                      const Vector& y);

/// Limiting fibre field y' at (q, y): the Hamiltonian field of d^2_N H with
/// respect to Omega^F, returned in vertical coordinates. The base velocity of
/// the limit is zero.
Vector limiting_field(const TwistedPhaseSpace& space, const Vector& q, const Vector& y);

/// Same field evaluated through the Williamson coordinates of fibre_data(q):
/// z'_i = 2 a_i z_{i+p}, z'_{i+p} = -2 a_i z_i.
Vector limiting_field_normal_form(const TwistedPhaseSpace& space, const Vector& q, const Vector& y);

/// |base part| / |fibre part| of X1. With `guiding_centre` the base part is
/// q' - omega(q)^{-1} p' (the base velocity in coordinates adapted to the
/// complement (TM)^Omega, to first order) instead of q'.
double base_fibre_ratio(const TwistedPhaseSpace& space, const RescaleConfig& cfg, const Vector& q,
                        const Vector& y, bool guiding_centre = false);

/// Sampling region for convergence_gap: base box x fibre ball of given radius.
struct SampleRegion {
  Vector base_lo;
  Vector base_hi;
  double fibre_radius = 1.0;
};

struct ConvergenceGap {
  double total = 0.0;  ///< sup |X1 - (0, X0)|
  double fibre = 0.0;  ///< sup |y'_1 - y'_0|
  double base = 0.0;   ///< sup |q'_1|
};

ConvergenceGap convergence_gap(const TwistedPhaseSpace& space, const RescaleConfig& cfg,
                               const SampleRegion& region, std::size_t n_samples, std::uint64_t seed = 1);

}  // namespace magflow
