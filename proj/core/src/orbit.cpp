#include "magflow/orbit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <tuple>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "magflow/errors.hpp"
#include "magflow/parallel.hpp"

namespace magflow {

namespace {

constexpr double kPi = std::numbers::pi;

/// x - y with base components reduced to the nearest periodic image.
Vector phase_difference(const BaseManifold& base, const Vector& x, const Vector& y) {
  const Eigen::Index d = base.dim();
  Vector out = x - y;
  out.head(d) = base.difference(x.head(d), y.head(d));
  return out;
}

/// Points of S^{2k-1} in R^{2k} on a hyperspherical angle grid.
std::vector<Vector> sphere_points(int k, int n) {
  const int dim = 2 * k;
  const int n_angles = dim - 1;
  std::vector<Vector> out;
  std::vector<int> idx(static_cast<std::size_t>(n_angles), 0);
  for (;;) {
    Vector u(dim);
    double sin_prod = 1.0;
    for (int a = 0; a < n_angles; ++a) {
      const bool last = a == n_angles - 1;
      const double phi = last ? 2.0 * kPi * idx[a] / n : kPi * (idx[a] + 0.5) / n;
      u(a) = sin_prod * std::cos(phi);
      sin_prod *= std::sin(phi);
    }
    u(dim - 1) = sin_prod;
    out.push_back(u);
    int a = 0;
    while (a < n_angles && ++idx[a] == n) idx[a++] = 0;
    if (a == n_angles) break;
  }
  return out;
}

struct Residual {
  Vector f;
  Vector end;  ///< phi_T(x)
  double periodic = 0.0;
  double energy = 0.0;
};

Residual shooting_residual(const TwistedPhaseSpace& space, const Vector& x, double period, double level,
                           const Vector& seed, const Vector& phase_normal, int steps) {
  const Eigen::Index n = x.size();
  const Eigen::Index d = n / 2;
  Residual r;
  r.end = flow(space, x, period, steps);
  r.f.resize(n + 2);
  r.f.head(n) = phase_difference(space.base(), r.end, x);
  r.f(n) = space.hamiltonian(x.head(d), x.tail(d)) - level;
  r.f(n + 1) = phase_difference(space.base(), x, seed).dot(phase_normal);
  r.periodic = r.f.head(n).norm();
  r.energy = std::abs(r.f(n));
  return r;
}

double fd_step(const Vector& x, double fd_scale) { return fd_scale * std::max(1.0, x.cwiseAbs().maxCoeff()); }

}  // namespace

double class_period(const Vector& eigenvalues, const std::vector<int>& members, double rel_tol) {
  if (members.empty()) throw InvalidArgument("class_period: empty class");
  double a_min = eigenvalues(members.front());
  for (int i : members) a_min = std::min(a_min, eigenvalues(i));
  const double base_period = kPi / a_min;
  // Small multiples only: with many turns any ratio looks integral within rel_tol.
  for (int k = 1; k <= 64; ++k) {
    const double t = k * base_period;
    bool all = true;
    for (int i : members) {
      const double turns = eigenvalues(i) * t / kPi;
      if (std::abs(turns - std::round(turns)) > rel_tol * turns) {
        all = false;
        break;
      }
    }
    if (all) return t;
  }
  return base_period;
}

SeedSet seed_from_limit(const TwistedPhaseSpace& space, const ResonancePartition& partition, int class_index,
                        double epsilon, int n_base, int n_fibre) {
  if (class_index < 0 || class_index >= partition.q())
    throw InvalidArgument("seed_from_limit: class index " + std::to_string(class_index) + " out of range");
  if (!(epsilon > 0.0)) throw InvalidArgument("seed_from_limit: epsilon must be positive");
  if (n_base < 1 || n_fibre < 1) throw InvalidArgument("seed_from_limit: seed counts must be positive");

  const auto& members = partition.classes[static_cast<std::size_t>(class_index)];
  const int k = static_cast<int>(members.size());
  const Eigen::Index p = space.fibre_half_dim();
  const auto grid = grid_points(space.base(), std::vector<int>(static_cast<std::size_t>(space.base_dim()), n_base));
  const auto directions = sphere_points(k, n_fibre);

  SeedSet set;
  set.class_index = class_index;
  set.epsilon = epsilon;
  set.energy = epsilon * epsilon;
  for (const Vector& q : grid) {
    const FibreData fd = fibre_data(space, q);
    const WilliamsonResult w = williamson(fd.omega_f, fd.form);
    const double period = class_period(w.eigenvalues, members);
    for (const Vector& u : directions) {
      Vector z = Vector::Zero(2 * p);
      for (int j = 0; j < k; ++j) {
        const int i = members[static_cast<std::size_t>(j)];
        const double s = 1.0 / std::sqrt(w.eigenvalues(i));
        z(i) = u(2 * j) * s;
        z(i + p) = u(2 * j + 1) * s;
      }
      const Vector a = w.basis * z;
      set.seeds.push_back({q, epsilon * (fd.to_vertical * a), 0.0});
      set.predicted_periods.push_back(period);
      set.fibre_directions.push_back(a);
    }
  }
  return set;
}

double OrbitRecord::diameter(const BaseManifold& base) const {
  double best = 0.0;
  for (std::size_t i = 0; i < loop.size(); ++i)
    for (std::size_t j = i + 1; j < loop.size(); ++j)
      best = std::max(best, phase_difference(base, loop[i], loop[j]).norm());
  return best;
}

double OrbitRecord::floquet_distance_to_one() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& mu : floquet) best = std::min(best, std::abs(mu - 1.0));
  return best;
}

Matrix monodromy(const TwistedPhaseSpace& space, const Vector& x, double period, int steps, double fd_scale) {
  const Eigen::Index n = x.size();
  const Vector end = flow(space, x, period, steps);
  const double h = fd_step(x, fd_scale);
  Matrix m(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector xp = x;
    xp(j) += h;
    m.col(j) = (flow(space, xp, period, steps) - end) / h;
  }
  return m;
}

OrbitResult find_orbit(const TwistedPhaseSpace& space, const PhaseState& seed, double energy_level, double t_guess,
                       const ShootingConfig& config) {
  if (!(t_guess > 0.0)) throw InvalidArgument("find_orbit: period guess must be positive");
  if (config.loop_nodes < 1 || config.steps < config.loop_nodes)
    throw InvalidArgument("find_orbit: steps must be at least loop_nodes");

  OrbitResult out;
  out.period = t_guess;
  const Eigen::Index d = space.base_dim();
  const Eigen::Index n = 2 * d;
  const int steps = (config.steps + config.loop_nodes - 1) / config.loop_nodes * config.loop_nodes;

  const Vector x0 = seed.packed();
  const double h0 = space.hamiltonian(seed.q, seed.p);
  if (std::abs(h0 - energy_level) > config.seed_level_tol * std::max(std::abs(energy_level), 1e-300)) {
    out.rejection = "precondition: seed off energy level";
    out.residual = std::abs(h0 - energy_level);
    return out;
  }

  Vector phase_normal = hamiltonian_field(space, x0);
  const double fn = phase_normal.norm();
  if (!(fn > 0.0)) {
    out.rejection = "precondition: seed is an equilibrium";
    return out;
  }
  phase_normal /= fn;

  Vector x = x0;
  Vector anchor = x0;
  double period = t_guess;
  Residual r = shooting_residual(space, x, period, energy_level, anchor, phase_normal, steps);
  const double h = fd_step(x0, config.fd_scale);

  int it = 0;
  for (;; ++it) {
    out.residual = r.periodic;
    out.iterations = it;
    out.period = period;
    if (!r.f.allFinite()) {
      out.rejection = "non_finite";
      return out;
    }
    if (r.periodic <= config.tol && r.energy <= config.energy_tol) break;
    if (it >= config.max_iter) {
      out.rejection = "max_iter";
      return out;
    }

    if (config.moving_anchor) {
      anchor = x;
      phase_normal = hamiltonian_field(space, x).normalized();
      r.f(n + 1) = 0.0;
    }

    Matrix jac = Matrix::Zero(n + 2, n + 1);
    for (Eigen::Index j = 0; j < n; ++j) {
      Vector xp = x;
      xp(j) += h;
      jac.col(j).head(n) = (flow(space, xp, period, steps) - r.end) / h;
      jac(j, j) -= 1.0;
    }
    jac.col(n).head(n) = hamiltonian_field(space, r.end);
    jac.row(n).head(n) = space.hamiltonian_gradient(x.head(d), x.tail(d)).transpose();
    jac.row(n + 1).head(n) = phase_normal.transpose();

    Eigen::JacobiSVD<Matrix> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-9);
    const Vector delta = svd.solve(-r.f);

    const double merit = r.f.norm();
    double lambda = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 12; ++ls, lambda *= 0.5) {
      const Vector xt = x + lambda * delta.head(n);
      double tt = period + lambda * delta(n);
      if (!(tt > 0.0)) continue;
      Residual rt = shooting_residual(space, xt, tt, energy_level, anchor, phase_normal, steps);
      for (int k = 0; k < config.period_refinements && rt.f.allFinite(); ++k) {
        // One Gauss-Newton step in T alone removes the gyro-phase mismatch.
        const Vector v = hamiltonian_field(space, rt.end);
        const double t_new = tt - rt.f.head(n).dot(v) / v.squaredNorm();
        if (!(t_new > 0.0)) break;
        Residual rr = shooting_residual(space, xt, t_new, energy_level, anchor, phase_normal, steps);
        if (!(rr.f.allFinite() && rr.f.norm() < rt.f.norm())) break;
        tt = t_new;
        rt = std::move(rr);
      }
      if (rt.f.allFinite() && rt.f.norm() < merit) {
        x = xt;
        period = tt;
        r = std::move(rt);
        improved = true;
        break;
      }
    }
    if (!improved) {
      out.rejection = "stalled";
      return out;
    }
    if (period < config.period_min) {
      out.period = period;
      out.rejection = "period_collapse";
      return out;
    }
  }

  if (period < config.period_min || (config.period_max > 0.0 && period > config.period_max)) {
    out.rejection = period < config.period_min ? "period_collapse" : "period_window";
    return out;
  }

  // Re-anchor in the chart so the record is reproducible from its wrapped representative.
  x.head(d) = space.base().wrap(x.head(d));
  r = shooting_residual(space, x, period, energy_level, x, phase_normal, steps);
  if (!(r.periodic <= config.tol)) {
    out.rejection = "max_iter";
    out.residual = r.periodic;
    return out;
  }

  OrbitRecord rec;
  rec.representative = PhaseState::unpack(x, 0.0);
  rec.period = period;
  rec.energy = space.hamiltonian(x.head(d), x.tail(d));
  rec.newton_residual = r.periodic;
  rec.iterations = it;

  const Matrix mono = monodromy(space, x, period, steps, config.fd_scale);
  Eigen::EigenSolver<Matrix> es(mono, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) rec.floquet.push_back(es.eigenvalues()(i));

  const auto nodes = flow_nodes(space, x, period, steps);
  const int stride = steps / config.loop_nodes;
  for (int k = 0; k < config.loop_nodes; ++k) rec.loop.push_back(nodes[static_cast<std::size_t>(k * stride)]);

  out.orbit = std::move(rec);
  out.residual = r.periodic;
  return out;
}

double distance_to_loop(const BaseManifold& base, const Vector& x, const std::vector<Vector>& loop) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t k = loop.size();
  for (std::size_t i = 0; i < k; ++i) {
    const Vector& a = loop[i];
    const Vector v = phase_difference(base, x, a);
    const Vector s = phase_difference(base, loop[(i + 1) % k], a);
    const double ss = s.squaredNorm();
    const double t = ss > 0.0 ? std::clamp(v.dot(s) / ss, 0.0, 1.0) : 0.0;
    best = std::min(best, (v - t * s).norm());
  }
  return best;
}

namespace {

bool periods_commensurate(double a, double b, const DedupConfig& cfg) {
  const double big = std::max(a, b);
  const double small = std::min(a, b);
  const double ratio = big / small;
  if (ratio > cfg.max_multiple + 0.5) return false;
  return std::abs(ratio - std::round(ratio)) <= cfg.period_rel_tol * ratio;
}

bool record_less(const OrbitRecord& a, const OrbitRecord& b) {
  auto key = [](const OrbitRecord& r) {
    std::vector<double> k(r.representative.q.data(), r.representative.q.data() + r.representative.q.size());
    k.insert(k.end(), r.representative.p.data(), r.representative.p.data() + r.representative.p.size());
    k.push_back(r.period);
    return k;
  };
  return key(a) < key(b);
}

bool better_representative(const OrbitRecord& a, const OrbitRecord& b) {
  if (a.newton_residual != b.newton_residual) return a.newton_residual < b.newton_residual;
  return record_less(a, b);
}

}  // namespace

std::vector<OrbitRecord> deduplicate(const std::vector<OrbitRecord>& orbits, const BaseManifold& base,
                                     const DedupConfig& config) {
  const std::size_t n = orbits.size();
  std::vector<double> diam(n);
  for (std::size_t i = 0; i < n; ++i) diam[i] = orbits[i].diameter(base);

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Vector xi = orbits[i].representative.packed();
    for (std::size_t j = i + 1; j < n; ++j) {
      if (find(i) == find(j)) continue;
      if (!periods_commensurate(orbits[i].period, orbits[j].period, config)) continue;
      const double tol = config.tol_geom_factor * std::min(diam[i], diam[j]);
      const Vector xj = orbits[j].representative.packed();
      if (distance_to_loop(base, xi, orbits[j].loop) <= tol || distance_to_loop(base, xj, orbits[i].loop) <= tol)
        parent[find(i)] = find(j);
    }
  }

  std::map<std::size_t, std::size_t> best;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = find(i);
    auto it = best.find(root);
    if (it == best.end())
      best.emplace(root, i);
    else if (better_representative(orbits[i], orbits[it->second]))
      it->second = i;
  }
  std::vector<OrbitRecord> out;
  out.reserve(best.size());
  for (const auto& [root, i] : best) out.push_back(orbits[i]);
  std::sort(out.begin(), out.end(), record_less);
  return out;
}

double ds_residual(const TwistedPhaseSpace& space, const std::vector<Vector>& loop, double period,
                   int n_variations, std::uint64_t seed, int modes) {
  const std::size_t k = loop.size();
  if (k < 64) throw InvalidArgument("ds_residual: loop needs at least 64 nodes");
  if (!(period > 0.0)) throw InvalidArgument("ds_residual: period must be positive");
  const BaseManifold& base = space.base();
  const Eigen::Index d = space.base_dim();
  const Eigen::Index n = 2 * d;

  // Lattice winding of the closed loop.
  Vector winding = Vector::Zero(n);
  {
    const Vector close = loop.back() + phase_difference(base, loop.front(), loop.back());
    const Vector w = close - loop.front();
    for (Eigen::Index i = 0; i < d; ++i) {
      const double L = base.periodic ? base.periods[static_cast<std::size_t>(i)] : 0.0;
      winding(i) = L > 0.0 ? std::round(w(i) / L) * L : 0.0;
    }
  }

  // Spectral derivative of the detrended loop.
  const double kd = static_cast<double>(k);
  Matrix values(n, static_cast<Eigen::Index>(k));
  for (std::size_t j = 0; j < k; ++j) values.col(static_cast<Eigen::Index>(j)) = loop[j] - winding * (j / kd);
  Eigen::MatrixXcd coeff = Eigen::MatrixXcd::Zero(n, static_cast<Eigen::Index>(k));
  for (std::size_t m = 0; m < k; ++m)
    for (std::size_t j = 0; j < k; ++j) {
      const double ang = -2.0 * kPi * static_cast<double>((m * j) % k) / kd;
      coeff.col(static_cast<Eigen::Index>(m)) += values.col(static_cast<Eigen::Index>(j)).cast<std::complex<double>>() *
                                                 std::complex<double>(std::cos(ang), std::sin(ang));
    }
  for (std::size_t m = 0; m < k; ++m) {
    const double freq = 2 * m == k ? 0.0 : static_cast<double>(m <= k / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(k));
    coeff.col(static_cast<Eigen::Index>(m)) *= std::complex<double>(0.0, 2.0 * kPi * freq / period);
  }
  std::vector<Vector> velocity(k, winding / period);
  for (std::size_t j = 0; j < k; ++j) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(n);
    for (std::size_t m = 0; m < k; ++m) {
      const double ang = 2.0 * kPi * static_cast<double>((m * j) % k) / kd;
      acc += coeff.col(static_cast<Eigen::Index>(m)) * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    velocity[j] += acc.real() / kd;
  }

  std::vector<Matrix> forms(k);
  std::vector<Vector> grads(k);
  for (std::size_t j = 0; j < k; ++j) {
    forms[j] = space.twisted_form_matrix(loop[j].head(d));
    grads[j] = space.hamiltonian_gradient(loop[j].head(d), loop[j].tail(d));
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int v = 0; v < n_variations; ++v) {
    std::vector<Vector> c(static_cast<std::size_t>(modes) + 1), s(static_cast<std::size_t>(modes) + 1);
    for (int m = 0; m <= modes; ++m) {
      c[m] = Vector::NullaryExpr(n, [&](Eigen::Index) { return normal(rng); });
      s[m] = Vector::NullaryExpr(n, [&](Eigen::Index) { return normal(rng); });
    }
    std::vector<Vector> xi(k);
    double scale = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      Vector x = Vector::Zero(n);
      for (int m = 0; m <= modes; ++m) {
        const double ang = 2.0 * kPi * m * static_cast<double>(j) / kd;
        x += c[m] * std::cos(ang) + s[m] * std::sin(ang);
      }
      const double gg = grads[j].squaredNorm();
      if (gg > 0.0) x -= (grads[j].dot(x) / gg) * grads[j];
      scale = std::max(scale, x.norm());
      xi[j] = std::move(x);
    }
    if (!(scale > 0.0)) continue;
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += velocity[j].dot(forms[j] * xi[j]);
    worst = std::max(worst, std::abs(sum * period / kd) / scale);
  }
  return worst;
}

double ds_residual(const TwistedPhaseSpace& space, const OrbitRecord& orbit, int n_variations, std::uint64_t seed) {
  return ds_residual(space, orbit.loop, orbit.period, n_variations, seed);
}

double closure_error(const TwistedPhaseSpace& space, const OrbitRecord& orbit, int steps) {
  IntegratorConfig cfg;
  cfg.method = IntegratorMethod::rk4;
  cfg.step = orbit.period / steps;
  cfg.sample_every = static_cast<std::size_t>(steps);
  cfg.drift_bound = std::numeric_limits<double>::infinity();
  const Trajectory traj = integrate(space, orbit.representative, orbit.period, cfg);
  if (traj.truncated) return std::numeric_limits<double>::infinity();
  return phase_difference(space.base(), traj.states.back().packed(), orbit.representative.packed()).norm();
}

OrbitValidity check_orbit(const TwistedPhaseSpace& space, const OrbitRecord& orbit, double energy_level,
                          const CensusConfig& config) {
  OrbitValidity v;
  const int steps = static_cast<int>(orbit.loop.size()) *
                    ((config.shooting.steps + config.shooting.loop_nodes - 1) / config.shooting.loop_nodes);
  v.closure = closure_error(space, orbit, steps);
  v.closure_ok = v.closure <= 10.0 * orbit.newton_residual;
  v.energy_error = std::abs(orbit.energy - energy_level);
  v.energy_ok = v.energy_error <= 1e-8;
  v.floquet_distance = orbit.floquet_distance_to_one();
  v.floquet_ok = v.floquet_distance <= config.shooting.floquet_tol;
  v.ds = ds_residual(space, orbit.loop, orbit.period, config.ds_variations, config.seed);
  v.ds_ok = v.ds <= config.ds_threshold;
  auto broken = orbit.loop;
  broken[broken.size() / 3](0) += config.negative_control_shift;
  v.ds_negative = ds_residual(space, broken, orbit.period, config.ds_variations, config.seed);
  v.negative_ok = v.ds_negative >= 1e3 * config.ds_threshold;
  return v;
}

OrbitCensus orbit_census(const TwistedPhaseSpace& space, const CensusConfig& config,
                         const ResonanceOptions& resonance) {
  const Eigen::Index d = space.base_dim();
  const auto grid = grid_points(space.base(), std::vector<int>(static_cast<std::size_t>(d), config.n_base));
  const SpectrumField field = eigenvalue_field(space, grid, resonance, config.jobs);
  const auto samples = field.samples();

  OrbitCensus census;
  census.partition = field.partition;
  std::vector<int> stable_orders;
  for (const auto& s : stable_eigenvalue_sets(field.partition, samples)) stable_orders.push_back(s.order);
  census.bounds = make_bound_report(field.partition, stable_orders, space.base().cuplength,
                                    space.base().crit_lower_bound, static_cast<int>(d), static_cast<int>(d / 2));

  std::vector<int> classes = config.classes;
  if (classes.empty()) {
    classes.resize(static_cast<std::size_t>(field.partition.q()));
    std::iota(classes.begin(), classes.end(), 0);
  }

  double t_lo = std::numeric_limits<double>::infinity();
  double t_hi = 0.0;
  for (int c : classes) {
    if (c < 0 || c >= field.partition.q()) throw InvalidArgument("orbit_census: class index out of range");
    for (const Vector& a : field.eigenvalues) {
      const double t = class_period(a, field.partition.classes[static_cast<std::size_t>(c)]);
      t_lo = std::min(t_lo, t);
      t_hi = std::max(t_hi, t);
    }
  }
  ShootingConfig shooting = config.shooting;
  shooting.period_min = (1.0 - config.window) * t_lo;
  shooting.period_max = (1.0 + config.window) * t_hi;

  for (double eps : config.epsilons) {
    const auto t0 = std::chrono::steady_clock::now();
    CensusRow row;
    row.epsilon = eps;
    row.period_min = shooting.period_min;
    row.period_max = shooting.period_max;
    row.bound = census.bounds.census_bound();

    struct Job {
      PhaseState seed;
      double period;
      int class_index;
    };
    std::vector<Job> jobs;
    for (int c : classes) {
      const SeedSet set = seed_from_limit(space, field.partition, c, eps, config.n_base, config.n_fibre);
      for (std::size_t i = 0; i < set.seeds.size(); ++i) jobs.push_back({set.seeds[i], set.predicted_periods[i], c});
    }
    row.seeds = jobs.size();
    const double level = eps * eps;

    auto results = parallel_map<OrbitResult>(jobs.size(), config.jobs, [&](std::size_t i) {
      return find_orbit(space, jobs[i].seed, level, jobs[i].period, shooting);
    });

    std::vector<OrbitRecord> accepted;
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (!results[i].accepted()) {
        ++row.rejections[results[i].rejection];
        continue;
      }
      OrbitRecord rec = std::move(*results[i].orbit);
      rec.seed_index = i;
      rec.class_index = jobs[i].class_index;
      rec.epsilon = eps;
      accepted.push_back(std::move(rec));
    }
    row.converged = accepted.size();
    row.convergence_rate = row.seeds ? static_cast<double>(row.converged) / static_cast<double>(row.seeds) : 0.0;

    auto validity = parallel_map<OrbitValidity>(accepted.size(), config.jobs, [&](std::size_t i) {
      return check_orbit(space, accepted[i], level, config);
    });
    row.min_negative_ds = accepted.empty() ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < accepted.size(); ++i) {
      accepted[i].ds_residual = validity[i].ds;
      row.max_ds = std::max(row.max_ds, validity[i].ds);
      row.min_negative_ds = std::min(row.min_negative_ds, validity[i].ds_negative);
      if (validity[i].ok()) ++row.valid;
    }
    if (row.valid != row.converged) census.validity_ok = false;

    row.orbits = deduplicate(accepted, space.base(), config.dedup);
    row.distinct = row.orbits.size();
    row.pass = row.distinct >= static_cast<std::size_t>(row.bound);
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    census.rows.push_back(std::move(row));
  }

  for (std::size_t i = 0; i < census.rows.size(); ++i) {
    if (census.rows[i].convergence_rate < config.convergence_threshold) continue;
    if (!census.headline || census.rows[i].epsilon < census.rows[*census.headline].epsilon) census.headline = i;
  }
  return census;
}

}  // namespace magflow
