// magflow <williamson|grc|converge|census|simulate> --config PATH [--out DIR] [--jobs N] [--seed K]
//
// Exit codes: 0 pass, 1 assertion or bound failure, 2 configuration error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "magflow/config.hpp"
#include "magflow/errors.hpp"
#include "magflow/orbit.hpp"
#include "magflow/predictions.hpp"
#include "magflow/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace magflow;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kConfigError = 2;

struct Options {
  std::string config;
  std::string out = ".";
  unsigned jobs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void write_json(const fs::path& path, const json& doc) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << std::setw(2) << doc << '\n';
}

RunConfig load(const Options& opt) {
  RunConfig cfg = load_run_config(opt.config);
  if (opt.jobs > 0) cfg.jobs = opt.jobs;
  if (opt.seed_set) cfg.seed = opt.seed;
  return cfg;
}

int cmd_williamson(const Options& opt) {
  RunConfig cfg = load(opt);
  const WilliamsonRunConfig w = cfg.williamson.value_or(WilliamsonRunConfig{});
  json report = {{"fixture", cfg.fixture.name}, {"tolerance", w.tolerance}};
  json rows = json::array();
  bool pass = true;
  json first_failure = nullptr;

  auto judge = [&](const WilliamsonCheck& c) {
    return c.symplectic_residual <= w.tolerance && c.form_residual <= w.tolerance &&
           c.eigenvalue_error <= w.tolerance;
  };

  if (w.mode == WilliamsonRunConfig::Mode::random) {
    report["mode"] = "random";
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal;
    for (int dim : w.dimensions) {
      const Eigen::Index p = dim / 2;
      WilliamsonCheck worst;
      int clustered = 0;
      for (int k = 0; k < w.instances; ++k) {
        const Matrix m = Matrix::NullaryExpr(dim, dim, [&](Eigen::Index, Eigen::Index) { return normal(rng); });
        Matrix a = m * m.transpose() + w.spd_shift * Matrix::Identity(dim, dim);
        a = (0.5 * (a + a.transpose())).eval();
        const SymplecticMatrix omega = SymplecticMatrix::standard(p);
        const QuadraticForm form(a);
        const WilliamsonResult res = williamson(omega, form, cfg.fixture.williamson);
        const WilliamsonCheck c = check_williamson(omega, form, res);
        clustered += res.clustered() ? 1 : 0;
        worst.symplectic_residual = std::max(worst.symplectic_residual, c.symplectic_residual);
        worst.form_residual = std::max(worst.form_residual, c.form_residual);
        worst.eigenvalue_error = std::max(worst.eigenvalue_error, c.eigenvalue_error);
        if (!judge(c) && first_failure.is_null()) {
          pass = false;
          first_failure = {{"dimension", dim}, {"instance", k}, {"form", matrix_json(a)}, {"check", to_json(c)}};
        }
      }
      rows.push_back({{"dimension", dim}, {"instances", w.instances}, {"clustered", clustered}, {"worst", to_json(worst)}});
    }
  } else if (w.mode == WilliamsonRunConfig::Mode::fibre) {
    report["mode"] = "fibre";
    const TwistedPhaseSpace space = cfg.fixture.space();
    for (const Vector& q : grid_points(space.base(), cfg.fixture.grid)) {
      const FibreData fd = fibre_data(space, q);
      const WilliamsonResult res = williamson(fd.omega_f, fd.form, cfg.fixture.williamson);
      const WilliamsonCheck c = check_williamson(fd.omega_f, fd.form, res);
      if (!judge(c) && first_failure.is_null()) {
        pass = false;
        first_failure = {{"q", vector_json(q)}, {"check", to_json(c)}};
      }
      rows.push_back({{"q", vector_json(q)},
                      {"eigenvalues", vector_json(res.eigenvalues)},
                      {"clusters", res.clusters},
                      {"check", to_json(c)}});
    }
  } else {
    report["mode"] = "matrix";
    const Eigen::Index dim = w.form.rows();
    const SymplecticMatrix omega =
        w.omega.size() == 0 ? SymplecticMatrix::standard(dim / 2) : SymplecticMatrix(w.omega);
    const QuadraticForm form(w.form);
    const WilliamsonResult res = williamson(omega, form, cfg.fixture.williamson);
    const WilliamsonCheck c = check_williamson(omega, form, res);
    pass = judge(c);
    if (!pass) first_failure = {{"check", to_json(c)}};
    rows.push_back({{"result", to_json(res)}, {"check", to_json(c)}});
  }

  report["rows"] = rows;
  report["first_failure"] = first_failure;
  report["pass"] = pass;
  write_json(fs::path(opt.out) / "williamson.json", report);
  std::cout << "williamson: " << (pass ? "pass" : "FAIL") << '\n';
  if (!pass) std::cout << "first failing instance: " << first_failure.dump() << '\n';
  return pass ? kPass : kFail;
}

int cmd_grc(const Options& opt) {
  RunConfig cfg = load(opt);
  const TwistedPhaseSpace space = cfg.fixture.space();
  const auto grid = grid_points(space.base(), cfg.fixture.grid);
  const SpectrumField field = eigenvalue_field(space, grid, cfg.fixture.resonance, cfg.jobs);
  const auto samples = field.samples();
  std::vector<int> orders;
  for (const auto& s : stable_eigenvalue_sets(field.partition, samples)) orders.push_back(s.order);
  const auto d = static_cast<int>(space.base_dim());
  const BoundReport bounds = make_bound_report(field.partition, orders, space.base().cuplength,
                                               space.base().crit_lower_bound, d, d / 2);

  json report = {{"fixture", cfg.fixture.name},
                 {"spectrum", to_json(field)},
                 {"bound_report", to_json(bounds)},
                 {"closed_form_defect", check_closed(space.magnetic(), grid, 1e-5)}};

  bool pass = true;
  json failures = json::array();
  const json expect = cfg.raw.contains("grc") ? cfg.raw["grc"].value("expect", json::object()) : json::object();
  auto expect_int = [&](const char* key, int actual) {
    if (expect.contains(key) && expect[key].get<int>() != actual) {
      pass = false;
      failures.push_back({{"key", key}, {"expected", expect[key]}, {"actual", actual}});
    }
  };
  expect_int("q", bounds.q);
  expect_int("bound_main", bounds.bound_main);
  expect_int("bound_magnetic", bounds.bound_magnetic);
  if (expect.contains("grc_satisfied") && expect["grc_satisfied"].get<bool>() != bounds.grc_satisfied) {
    pass = false;
    failures.push_back({{"key", "grc_satisfied"}, {"actual", bounds.grc_satisfied}});
  }
  if (expect.contains("max_relative_spread")) {
    const double limit = expect["max_relative_spread"].get<double>();
    for (const auto& r : report["spectrum"]["eigenvalue_range"])
      if (r["relative_spread"].get<double>() > limit) {
        pass = false;
        failures.push_back({{"key", "max_relative_spread"}, {"actual", r["relative_spread"]}});
      }
  }
  report["failures"] = failures;
  report["pass"] = pass;
  write_json(fs::path(opt.out) / "grc.json", report);
  std::cout << "grc: q=" << bounds.q << " grc_satisfied=" << bounds.grc_satisfied
            << " bound_main=" << bounds.bound_main << " census_bound=" << bounds.census_bound() << " -> "
            << (pass ? "pass" : "FAIL") << '\n';
  return pass ? kPass : kFail;
}

int cmd_converge(const Options& opt) {
  RunConfig cfg = load(opt);
  const ConvergeRunConfig c = cfg.converge.value_or(ConvergeRunConfig{});
  const TwistedPhaseSpace space = cfg.fixture.space();
  SampleRegion region;
  region.base_lo = Vector::Zero(space.base_dim());
  region.base_hi = Eigen::Map<const Vector>(space.base().periods.data(), space.base_dim());
  region.fibre_radius = c.fibre_radius;

  json rows = json::array();
  bool pass = true;
  double prev = 0.0;
  for (std::size_t i = 0; i < c.epsilons.size(); ++i) {
    RescaleConfig rc{c.epsilons[i], c.epsilon_max, c.inverse_square_clock};
    const ConvergenceGap gap = convergence_gap(space, rc, region, c.samples, cfg.seed);
    json row = {{"epsilon", rc.epsilon}, {"gap", to_json(gap)}, {"ratio", nullptr}};
    if (i > 0) {
      const double ratio = gap.total / prev;
      row["ratio"] = ratio;
      if (!(gap.total < prev) || ratio > c.max_ratio) pass = false;
    }
    prev = gap.total;
    rows.push_back(row);
  }
  json sanity = nullptr;
  if (c.sanity_epsilon > 0.0) {
    RescaleConfig rc{c.sanity_epsilon, std::max(c.sanity_epsilon, c.epsilon_max), c.inverse_square_clock};
    const ConvergenceGap gap = convergence_gap(space, rc, region, c.samples, cfg.seed);
    sanity = {{"epsilon", rc.epsilon}, {"gap", to_json(gap)}, {"positive", gap.total > 0.0}};
    if (!(gap.total > 0.0)) pass = false;
  }
  const json report = {{"fixture", cfg.fixture.name}, {"max_ratio", c.max_ratio}, {"rows", rows},
                       {"sanity", sanity},            {"pass", pass}};
  write_json(fs::path(opt.out) / "converge.json", report);
  std::cout << "epsilon,gap,ratio\n";
  for (const auto& r : rows)
    std::cout << r["epsilon"] << ',' << r["gap"]["total"] << ',' << (r["ratio"].is_null() ? json("") : r["ratio"])
              << '\n';
  std::cout << "converge: " << (pass ? "pass" : "FAIL") << '\n';
  return pass ? kPass : kFail;
}

void write_orbit_csv(const TwistedPhaseSpace& space, const OrbitRecord& orbit, const CensusConfig& cc,
                     const fs::path& path) {
  IntegratorConfig ic;
  ic.step = orbit.period / cc.shooting.steps;
  ic.drift_bound = 1e-8;
  const Trajectory traj = integrate(space, orbit.representative, orbit.period, ic);
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  write_trajectory_csv(out, traj, to_json(orbit));
}

int cmd_census(const Options& opt) {
  RunConfig cfg = load(opt);
  if (!cfg.census) throw ConfigError("missing section 'census'");
  CensusConfig cc = *cfg.census;
  cc.jobs = cfg.jobs;
  cc.seed = cfg.seed;
  const TwistedPhaseSpace space = cfg.fixture.space();
  const OrbitCensus census = orbit_census(space, cc, cfg.fixture.resonance);

  json report = to_json(census);
  report["fixture"] = cfg.fixture.name;
  write_json(fs::path(opt.out) / "census.json", report);
  for (std::size_t r = 0; r < census.rows.size(); ++r) {
    const auto& row = census.rows[r];
    for (std::size_t k = 0; k < row.orbits.size(); ++k) {
      std::ostringstream name;
      name << "orbit_eps" << r << '_' << std::setw(3) << std::setfill('0') << k << ".csv";
      write_orbit_csv(space, row.orbits[k], cc, fs::path(opt.out) / "orbits" / name.str());
    }
  }
  std::cout << "epsilon,seeds,converged,distinct,bound,pass\n";
  for (const auto& row : census.rows)
    std::cout << row.epsilon << ',' << row.seeds << ',' << row.converged << ',' << row.distinct << ',' << row.bound
              << ',' << (row.pass ? "true" : "false") << '\n';
  std::cout << "census: " << (census.pass() ? "pass" : "FAIL") << '\n';
  return census.pass() ? kPass : kFail;
}

int cmd_simulate(const Options& opt) {
  RunConfig cfg = load(opt);
  if (!cfg.simulate) throw ConfigError("missing section 'simulate'");
  const SimulateRunConfig& s = *cfg.simulate;
  const TwistedPhaseSpace space = cfg.fixture.space();
  const Trajectory traj = integrate(space, s.start, s.duration, s.integrator);
  const bool pass = !traj.truncated && !traj.drift_flagged;
  const json header = {{"fixture", cfg.fixture.name},
                       {"method", traj.method},
                       {"step", traj.step},
                       {"duration", s.duration},
                       {"max_drift", traj.max_drift()},
                       {"drift_flagged", traj.drift_flagged},
                       {"truncated", traj.truncated},
                       {"error", traj.error}};
  const fs::path out = fs::path(opt.out) / "trajectory.csv";
  fs::create_directories(out.parent_path());
  std::ofstream csv(out);
  write_trajectory_csv(csv, traj, header);
  json report = header;
  report["samples"] = traj.states.size();
  report["final"] = {{"q", vector_json(traj.states.back().q)}, {"p", vector_json(traj.states.back().p)}};
  report["pass"] = pass;
  write_json(fs::path(opt.out) / "simulate.json", report);
  std::cout << "simulate: " << traj.states.size() << " samples, max drift " << traj.max_drift() << " -> "
            << (pass ? "pass" : "FAIL") << '\n';
  return pass ? kPass : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic orbits of magnetic flows near the zero section"};
  app.require_subcommand(1);
  Options opt;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "JSON run configuration")->required();
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.seed, "random seed")->each([&](const std::string&) { opt.seed_set = true; });
    return sub;
  };
  CLI::App* williamson_cmd = add("williamson", "Williamson normal form with oracle cross-check");
  CLI::App* grc_cmd = add("grc", "Symplectic spectrum field, resonance classes and bounds");
  CLI::App* converge_cmd = add("converge", "Convergence of the rescaled field to its limit");
  CLI::App* census_cmd = add("census", "Periodic-orbit census on low energy levels");
  CLI::App* simulate_cmd = add("simulate", "Single trajectory as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  try {
    if (williamson_cmd->parsed()) return cmd_williamson(opt);
    if (grc_cmd->parsed()) return cmd_grc(opt);
    if (converge_cmd->parsed()) return cmd_converge(opt);
    if (census_cmd->parsed()) return cmd_census(opt);
    if (simulate_cmd->parsed()) return cmd_simulate(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kConfigError;
}
