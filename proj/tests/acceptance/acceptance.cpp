// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "magflow/config.hpp"
#include "magflow/orbit.hpp"
#include "magflow/predictions.hpp"
#include "oracles.hpp"

using namespace magflow;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_seconds;
  const bool pass = out.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s [%d] %s (%.2f s / %.0f s) %s%s\n", pass ? "PASS" : "FAIL", id, name, secs, budget_seconds,
              out.detail.c_str(), in_time ? "" : " over time budget");
  std::fflush(stdout);
}

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

BoundReport bounds_for(const TwistedPhaseSpace& space, const SpectrumField& field) {
  std::vector<int> orders;
  for (const auto& s : stable_eigenvalue_sets(field.partition, field.samples())) orders.push_back(s.order);
  const auto d = static_cast<int>(space.base_dim());
  return make_bound_report(field.partition, orders, space.base().cuplength, space.base().crit_lower_bound, d, d / 2);
}

Outcome williamson_suite() {
  std::mt19937_64 rng(20240601);
  double worst_res = 0.0, worst_eig = 0.0;
  int instances = 0;
  for (int p = 1; p <= 4; ++p) {
    const SymplecticMatrix omega = SymplecticMatrix::standard(p);
    for (int k = 0; k < 100; ++k) {
      const Matrix a = oracle::random_spd(2 * p, rng);
      const QuadraticForm form(a);
      const WilliamsonResult w = williamson(omega, form);
      const Matrix& t = w.basis;
      Matrix diag = Matrix::Zero(2 * p, 2 * p);
      diag.diagonal() << w.eigenvalues, w.eigenvalues;
      worst_res = std::max(worst_res, (t.transpose() * omega.matrix() * t - oracle::standard_j(p)).cwiseAbs().maxCoeff());
      worst_res = std::max(worst_res, (t.transpose() * a * t - diag).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff());
      const Vector ref = oracle::imaginary_spectrum(omega.matrix(), a);
      worst_eig = std::max(worst_eig, ((w.eigenvalues - ref).array().abs() / ref.array()).maxCoeff());
      ++instances;
    }
  }
  return {worst_res <= 1e-10 && worst_eig <= 1e-10,
          std::to_string(instances) + " instances, max residual " + fmt(worst_res) + ", max eigenvalue error " +
              fmt(worst_eig)};
}

Outcome cyclotron() {
  const RunConfig cfg = load_run_config(oracle::fixture("t2_constant.json"));
  const TwistedPhaseSpace space = cfg.fixture.space();
  const Eigen::Vector2d q0(1.0, 1.0), p0(1.0, 0.0);
  const double energy = space.hamiltonian(q0, p0);
  IntegratorConfig ic;
  ic.step = 1e-3;
  const Trajectory traj = integrate(space, {q0, p0, 0.0}, 2 * kPi, ic);
  const auto& end = traj.states.back();
  const double closure = std::hypot(space.base().difference(end.q, q0).norm(), (end.p - p0).norm());
  const Eigen::Vector2d centre = oracle::guiding_centre(q0, p0, 1.0);
  const double radius = std::sqrt(2 * energy) / 1.0;
  double radius_err = 0.0;
  for (const auto& s : traj.states)
    radius_err = std::max(radius_err, std::abs(space.base().difference(s.q, centre).norm() - radius));
  return {std::abs(energy - 0.5) < 1e-15 && closure <= 1e-6 && radius_err <= 1e-6,
          "closure " + fmt(closure) + ", radius error " + fmt(radius_err)};
}

Outcome convergence() {
  std::string detail;
  bool pass = true;
  for (const char* name : {"t2_constant.json", "t2_perturbed.json"}) {
    const RunConfig cfg = load_run_config(oracle::fixture(name));
    const TwistedPhaseSpace space = cfg.fixture.space();
    const SampleRegion region{Vector::Zero(2), Vector::Constant(2, 2 * kPi), 1.0};
    double prev = 0.0;
    detail += std::string(name) + " ratios";
    for (double eps : {0.2, 0.1, 0.05, 0.025}) {
      const double gap = convergence_gap(space, {eps}, region, 256).total;
      if (prev > 0.0) {
        const double ratio = gap / prev;
        detail += " " + fmt(ratio);
        if (!(gap < prev) || ratio > 0.6) pass = false;
      }
      prev = gap;
    }
    detail += "; ";
  }
  return {pass, detail};
}

Outcome t4_resonance() {
  struct Case {
    const char* fixture;
    int q;
    int bound;
  };
  bool pass = true;
  std::string detail;
  for (const Case& c : {Case{"t4_c2.json", 1, 6}, Case{"t4_sqrt2.json", 2, 10}}) {
    const RunConfig cfg = load_run_config(oracle::fixture(c.fixture));
    const TwistedPhaseSpace space = cfg.fixture.space();
    const auto grid = grid_points(space.base(), cfg.fixture.grid);
    const SpectrumField field = eigenvalue_field(space, grid, cfg.fixture.resonance);
    // Eigenvalues against eig(Omega^F^{-1} A) with the hand-built complement.
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Matrix w = space.magnetic()(grid[i]);
      const Vector ref = oracle::imaginary_spectrum(-w, 0.5 * w.transpose() * space.inverse_metric(grid[i]) * w);
      if (((field.eigenvalues[i] - ref).array().abs() / ref.array()).maxCoeff() > 1e-10) pass = false;
    }
    const BoundReport b = bounds_for(space, field);
    if (b.q != c.q || b.bound_main != c.bound || !b.grc_satisfied) pass = false;
    detail += std::string(c.fixture) + ": q=" + std::to_string(b.q) + " bound=" + std::to_string(b.bound_main) + "; ";
  }
  return {pass, detail};
}

Outcome kahler() {
  const RunConfig cfg = load_run_config(oracle::fixture("t4_kahler.json"));
  const TwistedPhaseSpace space = cfg.fixture.space();
  const auto grid = grid_points(space.base(), {16, 16, 1, 1});
  const SpectrumField field = eigenvalue_field(space, grid, cfg.fixture.resonance, jobs());
  double spread = 0.0, oracle_err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector& a = field.eigenvalues[i];
    spread = std::max(spread, (a.maxCoeff() - a.minCoeff()) / a.mean());
    const Matrix w = space.magnetic()(grid[i]);
    const Vector ref = oracle::imaginary_spectrum(-w, 0.5 * w.transpose() * space.metric()(grid[i]).inverse() * w);
    oracle_err = std::max(oracle_err, ((a - ref).array().abs() / ref.array()).maxCoeff());
  }
  return {grid.size() == 256 && spread <= 1e-9 && oracle_err <= 1e-10,
          "max relative spread " + fmt(spread) + ", oracle error " + fmt(oracle_err)};
}

struct CensusRun {
  std::string fixture;
  OrbitCensus census;
  double ds_threshold = 0.0;
};

std::vector<CensusRun> censuses;

Outcome census() {
  bool pass = true;
  std::string detail;
  for (const char* name : {"t2_perturbed.json", "t4_kahler_flat.json"}) {
    const RunConfig cfg = load_run_config(oracle::fixture(name));
    CensusConfig cc = *cfg.census;
    cc.jobs = jobs();
    CensusRun run{name, orbit_census(cfg.fixture.space(), cc, cfg.fixture.resonance), cc.ds_threshold};
    const OrbitCensus& c = run.census;
    detail += std::string(name) + ":";
    for (const auto& row : c.rows)
      detail += " eps=" + fmt(row.epsilon) + " " + std::to_string(row.converged) + "/" + std::to_string(row.seeds) +
                " distinct=" + std::to_string(row.distinct);
    detail += " bound=" + std::to_string(c.bounds.census_bound());
    if (!c.headline) {
      pass = false;
      detail += " no eps reached the convergence threshold; ";
    } else {
      const CensusRow& h = c.rows[*c.headline];
      detail += " headline eps=" + fmt(h.epsilon) + "; ";
      if (!h.pass || h.distinct < 3) pass = false;
    }
    censuses.push_back(std::move(run));
  }
  if (censuses.size() != 2 || censuses[1].census.bounds.census_bound() != 6) pass = false;
  return {pass, detail};
}

Outcome validity() {
  if (censuses.empty()) return {false, "no census results"};
  bool pass = true;
  std::size_t orbits = 0;
  double max_ds = 0.0, min_neg = std::numeric_limits<double>::infinity(), threshold = 0.0;
  for (const auto& run : censuses) {
    threshold = std::max(threshold, run.ds_threshold);
    if (!run.census.validity_ok) pass = false;
    for (const auto& row : run.census.rows) {
      orbits += row.converged;
      if (row.valid != row.converged) pass = false;
      if (row.converged == 0) continue;
      max_ds = std::max(max_ds, row.max_ds);
      min_neg = std::min(min_neg, row.min_negative_ds);
      if (row.max_ds > run.ds_threshold || row.min_negative_ds < 1e3 * run.ds_threshold) pass = false;
    }
  }
  return {pass && orbits > 0, std::to_string(orbits) + " accepted orbits, max ds " + fmt(max_ds) +
                                  ", min negative control " + fmt(min_neg) + " (threshold " + fmt(threshold) + ")"};
}

Outcome partitions() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> size_dist(1, 12), cl_dist(0, 10);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = size_dist(rng);
    const int cl = cl_dist(rng);
    // Random composition of p into q >= 1 parts via random cut points.
    std::vector<int> sizes;
    int run = 1;
    for (int i = 1; i < p; ++i) {
      if (rng() % 2) {
        sizes.push_back(run);
        run = 1;
      } else {
        ++run;
      }
    }
    sizes.push_back(run);
    const auto per_class = per_class_bound(sizes, cl);
    int sum = 0;
    for (int b : per_class) sum += b;
    const int q = static_cast<int>(sizes.size());
    // n = 2p, m = p gives n - m = p.
    if (sum != bound_main(q, cl, 2 * p, p)) return {false, "mismatch at trial " + std::to_string(trial)};
    ++checked;
  }
  return {checked == 1000, std::to_string(checked) + " random partitions"};
}

}  // namespace

int main() {
  criterion(1, "williamson oracle suite", 5.0, williamson_suite);
  criterion(2, "cyclotron closure and radius", 1.0, cyclotron);
  criterion(3, "convergence gap decreases", 30.0, convergence);
  criterion(4, "T4 resonance classes and bounds", 5.0, t4_resonance);
  criterion(5, "Kaehler equal eigenvalues", 5.0, kahler);
  criterion(6, "orbit census meets bounds", 600.0, census);
  criterion(7, "accepted orbits validated", 60.0, validity);
  criterion(8, "per-class bounds sum to main bound", 5.0, partitions);
  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
