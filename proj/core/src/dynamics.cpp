#include "magflow/dynamics.hpp"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include <boost/numeric/odeint.hpp>

#include "magflow/errors.hpp"

namespace magflow {

Vector PhaseState::packed() const {
  Vector x(q.size() + p.size());
  x << q, p;
  return x;
}

PhaseState PhaseState::unpack(const Vector& x, double t) {
  const Eigen::Index d = x.size() / 2;
  return {x.head(d), x.tail(d), t};
}

Vector hamiltonian_field(const TwistedPhaseSpace& space, const Vector& q, const Vector& p) {
  const Eigen::Index d = space.base_dim();
  const Vector grad = space.hamiltonian_gradient(q, p);
  Vector x(2 * d);
  x.head(d) = grad.tail(d);
  x.tail(d) = space.magnetic()(q) * x.head(d) - grad.head(d);
  return x;
}

Vector hamiltonian_field(const TwistedPhaseSpace& space, const Vector& x) {
  const Eigen::Index d = space.base_dim();
  return hamiltonian_field(space, x.head(d), x.tail(d));
}

double Trajectory::max_drift() const {
  double worst = 0.0;
  for (double e : energy) worst = std::max(worst, std::abs(e - energy.front()));
  return worst;
}

namespace {

Vector rk4_step(const TwistedPhaseSpace& space, const Vector& x, double h) {
  const Vector k1 = hamiltonian_field(space, x);
  const Vector k2 = hamiltonian_field(space, x + 0.5 * h * k1);
  const Vector k3 = hamiltonian_field(space, x + 0.5 * h * k2);
  const Vector k4 = hamiltonian_field(space, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

PhaseState wrapped_state(const TwistedPhaseSpace& space, const Vector& x, double t) {
  PhaseState s = PhaseState::unpack(x, t);
  s.q = space.base().wrap(s.q);
  return s;
}

}  // namespace

Vector flow(const TwistedPhaseSpace& space, const Vector& x, double duration, int steps) {
  if (steps < 1) throw InvalidArgument("flow: steps must be positive");
  const double h = duration / steps;
  Vector y = x;
  for (int i = 0; i < steps; ++i) y = rk4_step(space, y, h);
  return y;
}

std::vector<Vector> flow_nodes(const TwistedPhaseSpace& space, const Vector& x, double duration, int steps) {
  if (steps < 1) throw InvalidArgument("flow_nodes: steps must be positive");
  const double h = duration / steps;
  std::vector<Vector> nodes;
  nodes.reserve(static_cast<std::size_t>(steps) + 1);
  nodes.push_back(x);
  for (int i = 0; i < steps; ++i) nodes.push_back(rk4_step(space, nodes.back(), h));
  return nodes;
}

Trajectory integrate(const TwistedPhaseSpace& space, const PhaseState& start, double duration,
                     const IntegratorConfig& config) {
  if (!(duration > 0.0)) throw InvalidArgument("integrate: duration must be positive");
  if (!(config.step > 0.0)) throw InvalidArgument("integrate: step must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  Trajectory traj;
  const Eigen::Index d = space.base_dim();
  auto record = [&](const Vector& x, double t) {
    traj.states.push_back(wrapped_state(space, x, t));
    traj.energy.push_back(space.hamiltonian(x.head(d), x.tail(d)));
  };

  Vector x = start.packed();
  record(x, start.t);

  if (config.method == IntegratorMethod::rk4) {
    traj.method = "rk4";
    const auto steps = static_cast<long>(std::ceil(duration / config.step - 1e-12));
    const double h = duration / static_cast<double>(steps);
    traj.step = h;
    const std::size_t every = std::max<std::size_t>(1, config.sample_every);
    for (long i = 1; i <= steps; ++i) {
      x = rk4_step(space, x, h);
      if (!x.allFinite()) {
        traj.truncated = true;
        traj.error = "non-finite state at step " + std::to_string(i);
        break;
      }
      if (static_cast<std::size_t>(i) % every == 0 || i == steps)
        record(x, start.t + static_cast<double>(i) * h);
    }
  } else {
    namespace odeint = boost::numeric::odeint;
    using State = std::vector<double>;
    traj.method = "dopri5";
    traj.step = config.step;
    auto system = [&](const State& s, State& ds, double) {
      const Vector v = hamiltonian_field(space, Eigen::Map<const Vector>(s.data(), 2 * d));
      ds.assign(v.data(), v.data() + v.size());
    };
    std::vector<double> times;
    const auto n_out = static_cast<long>(std::ceil(duration / config.step - 1e-12));
    for (long i = 0; i <= n_out; ++i)
      times.push_back(start.t + std::min(duration, static_cast<double>(i) * config.step));
    State s(x.data(), x.data() + x.size());
    bool first = true;
    auto observer = [&](const State& st, double t) {
      if (first) {
        first = false;
        return;
      }
      const Vector v = Eigen::Map<const Vector>(st.data(), 2 * d);
      if (!traj.truncated && !v.allFinite()) {
        traj.truncated = true;
        traj.error = "non-finite state at t = " + std::to_string(t);
      }
      if (!traj.truncated) record(v, t);
    };
    odeint::integrate_times(
        odeint::make_dense_output(config.abs_tol, config.rel_tol, odeint::runge_kutta_dopri5<State>()),
        system, s, times.begin(), times.end(), config.step, observer);
  }

  traj.drift_flagged = traj.max_drift() > config.drift_bound;
  traj.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const nlohmann::json& header) {
  out << "# " << header.dump() << '\n';
  if (traj.states.empty()) return;
  const Eigen::Index d = traj.states.front().q.size();
  out << 't';
  for (Eigen::Index i = 0; i < d; ++i) out << ",q" << i;
  for (Eigen::Index i = 0; i < d; ++i) out << ",p" << i;
  out << ",H\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& s = traj.states[k];
    out << s.t;
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << s.q(i);
    for (Eigen::Index i = 0; i < d; ++i) out << ',' << s.p(i);
    out << ',' << traj.energy[k] << '\n';
  }
}

void RescaleConfig::validate() const {
  if (!(epsilon > 0.0)) throw InvalidArgument("rescale: epsilon must be positive");
  if (epsilon > epsilon_max) throw InvalidArgument("rescale: epsilon exceeds epsilon_max");
}

Vector rescaled_field(const TwistedPhaseSpace& space, const RescaleConfig& cfg, const Vector& q,
                      const Vector& y) {
  cfg.validate();
  const Eigen::Index d = space.base_dim();
  Vector x = hamiltonian_field(space, q, cfg.epsilon * y);
  // Push forward through Phi^{-1}: (q', p') -> (q', p' / eps).
  x.tail(d) /= cfg.epsilon;
  if (cfg.inverse_square_clock) x *= cfg.clock();
  return x;
}

Vector limiting_field(const TwistedPhaseSpace& space, const Vector& q, const Vector& y) {
  const FibreData fd = fibre_data(space, q);
  const Vector a = fd.to_vertical.partialPivLu().solve(y);
  const Vector rhs = 2.0 * fd.form.matrix() * a;
  const Vector a_dot = fd.omega_f.matrix().partialPivLu().solve(rhs);
  return fd.to_vertical * a_dot;
}

Vector limiting_field_normal_form(const TwistedPhaseSpace& space, const Vector& q, const Vector& y) {
  const FibreData fd = fibre_data(space, q);
  const WilliamsonResult w = williamson(fd.omega_f, fd.form);
  const Eigen::Index p = w.eigenvalues.size();
  const Vector a = fd.to_vertical.partialPivLu().solve(y);
  const Vector z = w.basis.partialPivLu().solve(a);
  Vector z_dot(2 * p);
  for (Eigen::Index i = 0; i < p; ++i) {
    z_dot(i) = 2.0 * w.eigenvalues(i) * z(i + p);
    z_dot(i + p) = -2.0 * w.eigenvalues(i) * z(i);
  }
  return fd.to_vertical * (w.basis * z_dot);
}

double base_fibre_ratio(const TwistedPhaseSpace& space, const RescaleConfig& cfg, const Vector& q,
                        const Vector& y, bool guiding_centre) {
  const Eigen::Index d = space.base_dim();
  const Vector x1 = rescaled_field(space, cfg, q, y);
  Vector base = x1.head(d);
  if (guiding_centre) {
    // p' = eps * y'
    base -= space.magnetic()(q).partialPivLu().solve(cfg.epsilon * x1.tail(d));
  }
  return base.norm() / x1.tail(d).norm();
}

ConvergenceGap convergence_gap(const TwistedPhaseSpace& space, const RescaleConfig& cfg,
                               const SampleRegion& region, std::size_t n_samples, std::uint64_t seed) {
  const Eigen::Index d = space.base_dim();
  if (region.base_lo.size() != d || region.base_hi.size() != d)
    throw InvalidArgument("convergence_gap: region dimension mismatch");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;

  ConvergenceGap gap;
  for (std::size_t s = 0; s < n_samples; ++s) {
    Vector q(d), y(d);
    for (Eigen::Index i = 0; i < d; ++i)
      q(i) = region.base_lo(i) + (region.base_hi(i) - region.base_lo(i)) * unit(rng);
    for (Eigen::Index i = 0; i < d; ++i) y(i) = normal(rng);
    const double r = region.fibre_radius * std::pow(unit(rng), 1.0 / static_cast<double>(d));
    y *= r / y.norm();

    const Vector x1 = rescaled_field(space, cfg, q, y);
    const Vector y0 = limiting_field(space, q, y);
    Vector diff = x1;
    diff.tail(d) -= y0;
    gap.total = std::max(gap.total, diff.norm());
    gap.fibre = std::max(gap.fibre, diff.tail(d).norm());
    gap.base = std::max(gap.base, diff.head(d).norm());
  }
  return gap;
}

}  // namespace magflow
