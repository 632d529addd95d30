#include "magflow/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "magflow/errors.hpp"

namespace magflow {

namespace {

using nlohmann::json;

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("key '") + key + "': " + e.what());
  }
}

double positive(const json& j, const char* key, double fallback) {
  const double v = value_or<double>(j, key, fallback);
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("key '") + key + "' must be positive");
  return v;
}

int positive_int(const json& j, const char* key, int fallback) {
  const int v = value_or<int>(j, key, fallback);
  if (v < 1) throw ConfigError(std::string("key '") + key + "' must be a positive integer");
  return v;
}

const json& section(const json& doc, const char* key) {
  if (!doc.contains(key)) throw ConfigError(std::string("missing section '") + key + "'");
  const json& s = doc.at(key);
  if (!s.is_object()) throw ConfigError(std::string("section '") + key + "' must be an object");
  return s;
}

Matrix parse_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw ConfigError(std::string(what) + ": ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row.at(static_cast<std::size_t>(c)).is_number()) throw ConfigError(std::string(what) + ": non-numeric entry");
      m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
  }
  return m;
}

Vector parse_vector(const json& j, const char* what) {
  const auto v = value_or<std::vector<double>>(json{{"v", j}}, "v", {});
  if (v.empty()) throw ConfigError(std::string(what) + ": expected a nonempty numeric array");
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

BaseManifold parse_base(const json& doc) {
  const json& m = section(doc, "manifold");
  BaseManifold base;
  base.name = value_or<std::string>(m, "name", "manifold");
  if (m.contains("periods")) {
    base.periods = value_or<std::vector<double>>(m, "periods", {});
  } else {
    const int dim = positive_int(m, "dim", 2);
    base.periods.assign(static_cast<std::size_t>(dim), 2.0 * std::numbers::pi);
  }
  base.periodic = value_or<bool>(m, "periodic", true);
  base.cuplength = value_or<int>(m, "cuplength", 0);
  base.crit_lower_bound = value_or<int>(m, "crit", base.cuplength + 1);
  if (base.cuplength < 0 || base.crit_lower_bound < 0) throw ConfigError("manifold: negative topology constant");
  if (base.periods.empty() || base.periods.size() % 2 != 0)
    throw ConfigError("manifold: dimension must be even and positive");
  try {
    base.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("manifold: ") + e.what());
  }
  return base;
}

MagneticForm parse_magnetic(const json& spec, Eigen::Index dim) {
  const auto type = value_or<std::string>(spec, "type", "blocks");
  if (type == "blocks") {
    const auto c = value_or<std::vector<double>>(spec, "coefficients", {});
    if (static_cast<Eigen::Index>(c.size()) * 2 != dim) throw ConfigError("magnetic: need dim/2 coefficients");
    return MagneticForm::blocks(c);
  }
  if (type == "modulated") {
    const auto b = value_or<std::vector<double>>(spec, "base", {});
    const auto a = value_or<std::vector<double>>(spec, "amplitude", {});
    const auto ax = value_or<std::vector<int>>(spec, "axis", {});
    if (static_cast<Eigen::Index>(b.size()) * 2 != dim || a.size() != b.size() || ax.size() != b.size())
      throw ConfigError("magnetic: base, amplitude and axis need dim/2 entries each");
    for (int k : ax)
      if (k < 0 || k >= dim) throw ConfigError("magnetic: axis out of range");
    return MagneticForm::modulated(b, a, ax);
  }
  if (type == "matrix") {
    const Matrix w = parse_matrix(spec.at("entries"), "magnetic.entries");
    if (w.rows() != dim || w.cols() != dim) throw ConfigError("magnetic: matrix dimension mismatch");
    return MagneticForm([w](const Vector&) { return w; }, true);
  }
  throw ConfigError("magnetic: unknown type '" + type + "'");
}

MetricField parse_metric(const json& spec, Eigen::Index dim, const MagneticForm& magnetic) {
  const auto type = value_or<std::string>(spec, "type", "identity");
  if (type == "identity") return MetricField::identity(dim, positive(spec, "scale", 1.0));
  if (type == "diagonal") {
    const Vector v = parse_vector(spec.at("values"), "metric.values");
    if (v.size() != dim) throw ConfigError("metric: diagonal length mismatch");
    if ((v.array() <= 0.0).any()) throw ConfigError("metric: diagonal entries must be positive");
    return MetricField::diagonal(v);
  }
  if (type == "compatible") {
    if (!magnetic.constant()) throw ConfigError("metric: compatible metrics need a constant magnetic form");
    return MetricField::compatible(magnetic(Vector::Zero(dim)), value_or<double>(spec, "amplitude", 0.0));
  }
  throw ConfigError("metric: unknown type '" + type + "'");
}

WilliamsonRunConfig parse_williamson(const json& s) {
  WilliamsonRunConfig w;
  const auto mode = value_or<std::string>(s, "mode", "random");
  if (mode == "random")
    w.mode = WilliamsonRunConfig::Mode::random;
  else if (mode == "fibre")
    w.mode = WilliamsonRunConfig::Mode::fibre;
  else if (mode == "matrix")
    w.mode = WilliamsonRunConfig::Mode::matrix;
  else
    throw ConfigError("williamson: unknown mode '" + mode + "'");
  w.dimensions = value_or<std::vector<int>>(s, "dimensions", w.dimensions);
  for (int d : w.dimensions)
    if (d < 2 || d % 2 != 0) throw ConfigError("williamson: dimensions must be even and >= 2");
  w.instances = positive_int(s, "instances", w.instances);
  w.tolerance = positive(s, "tolerance", w.tolerance);
  w.spd_shift = positive(s, "spd_shift", w.spd_shift);
  if (w.mode == WilliamsonRunConfig::Mode::matrix) {
    if (!s.contains("form")) throw ConfigError("williamson: matrix mode needs 'form'");
    w.form = parse_matrix(s.at("form"), "williamson.form");
    if (s.contains("omega")) w.omega = parse_matrix(s.at("omega"), "williamson.omega");
  }
  return w;
}

ConvergeRunConfig parse_converge(const json& s) {
  ConvergeRunConfig c;
  c.epsilons = value_or<std::vector<double>>(s, "epsilons", c.epsilons);
  if (c.epsilons.empty()) throw ConfigError("converge: empty epsilon list");
  c.samples = static_cast<std::size_t>(positive_int(s, "samples", static_cast<int>(c.samples)));
  c.fibre_radius = positive(s, "fibre_radius", c.fibre_radius);
  c.max_ratio = positive(s, "max_ratio", c.max_ratio);
  c.epsilon_max = positive(s, "epsilon_max", c.epsilon_max);
  c.inverse_square_clock = value_or<bool>(s, "inverse_square_clock", false);
  c.sanity_epsilon = value_or<double>(s, "sanity_epsilon", c.sanity_epsilon);
  for (double e : c.epsilons)
    if (!(e > 0.0) || e > c.epsilon_max) throw ConfigError("converge: epsilons must lie in (0, epsilon_max]");
  return c;
}

SimulateRunConfig parse_simulate(const json& s, Eigen::Index dim) {
  SimulateRunConfig c;
  c.start.q = parse_vector(s.at("q"), "simulate.q");
  c.start.p = parse_vector(s.at("p"), "simulate.p");
  if (c.start.q.size() != dim || c.start.p.size() != dim) throw ConfigError("simulate: q and p need dim entries");
  c.duration = positive(s, "duration", c.duration);
  const auto method = value_or<std::string>(s, "method", "rk4");
  if (method == "rk4")
    c.integrator.method = IntegratorMethod::rk4;
  else if (method == "dopri5")
    c.integrator.method = IntegratorMethod::dopri5;
  else
    throw ConfigError("simulate: unknown method '" + method + "'");
  c.integrator.step = positive(s, "step", c.integrator.step);
  c.integrator.abs_tol = positive(s, "abs_tol", c.integrator.abs_tol);
  c.integrator.rel_tol = positive(s, "rel_tol", c.integrator.rel_tol);
  c.integrator.drift_bound = positive(s, "drift_bound", c.integrator.drift_bound);
  c.integrator.sample_every = static_cast<std::size_t>(positive_int(s, "sample_every", 1));
  return c;
}

CensusConfig parse_census(const json& s) {
  CensusConfig c;
  c.epsilons = value_or<std::vector<double>>(s, "epsilons", {});
  if (c.epsilons.empty()) throw ConfigError("census: empty epsilon list");
  for (double e : c.epsilons)
    if (!(e > 0.0)) throw ConfigError("census: epsilons must be positive");
  c.n_base = positive_int(s, "n_base", c.n_base);
  c.n_fibre = positive_int(s, "n_fibre", c.n_fibre);
  c.shooting.tol = positive(s, "tol", c.shooting.tol);
  c.shooting.energy_tol = positive(s, "energy_tol", c.shooting.energy_tol);
  c.shooting.max_iter = positive_int(s, "max_iter", c.shooting.max_iter);
  c.shooting.fd_scale = positive(s, "fd_scale", c.shooting.fd_scale);
  c.shooting.steps = positive_int(s, "steps", c.shooting.steps);
  c.shooting.loop_nodes = positive_int(s, "loop_nodes", c.shooting.loop_nodes);
  if (c.shooting.loop_nodes < 64) throw ConfigError("census: loop_nodes must be at least 64");
  if (c.shooting.steps < c.shooting.loop_nodes) throw ConfigError("census: steps must be at least loop_nodes");
  c.shooting.floquet_tol = positive(s, "floquet_tol", c.shooting.floquet_tol);
  c.dedup.tol_geom_factor = positive(s, "tol_geom_factor", c.dedup.tol_geom_factor);
  c.dedup.period_rel_tol = positive(s, "period_rel_tol", c.dedup.period_rel_tol);
  c.window = positive(s, "window", c.window);
  if (c.window >= 1.0) throw ConfigError("census: window must be below 1");
  c.convergence_threshold = positive(s, "convergence_threshold", c.convergence_threshold);
  c.ds_threshold = positive(s, "ds_threshold", c.ds_threshold);
  c.ds_variations = positive_int(s, "ds_variations", c.ds_variations);
  c.negative_control_shift = positive(s, "negative_control_shift", c.negative_control_shift);
  c.classes = value_or<std::vector<int>>(s, "classes", {});
  return c;
}

}  // namespace

Fixture parse_fixture(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  Fixture f;
  f.name = value_or<std::string>(doc, "name", "fixture");
  f.base = parse_base(doc);
  const Eigen::Index dim = f.base.dim();
  f.magnetic_spec = doc.contains("magnetic") ? doc.at("magnetic") : json::object();
  f.metric_spec = doc.contains("metric") ? doc.at("metric") : json::object();
  try {
    f.magnetic = parse_magnetic(f.magnetic_spec, dim);
    f.metric = parse_metric(f.metric_spec, dim, f.magnetic);
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("fixture: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(std::string("fixture: ") + e.what());
  }

  if (doc.contains("grid") && doc.at("grid").is_number_integer()) {
    f.grid.assign(static_cast<std::size_t>(dim), positive_int(doc, "grid", 8));
  } else {
    f.grid = value_or<std::vector<int>>(doc, "grid", std::vector<int>(static_cast<std::size_t>(dim), 8));
    if (static_cast<Eigen::Index>(f.grid.size()) != dim) throw ConfigError("grid: need one count per axis");
    for (int g : f.grid)
      if (g < 1) throw ConfigError("grid: counts must be positive");
  }
  const json res = doc.contains("resonance") ? doc.at("resonance") : json::object();
  f.resonance.max_multiple = positive_int(res, "max_multiple", f.resonance.max_multiple);
  f.resonance.rel_tol = positive(res, "rel_tol", f.resonance.rel_tol);
  f.williamson.separation_tol = positive(doc, "separation_tol", f.williamson.separation_tol);

  try {
    (void)f.space();
  } catch (const Error& e) {
    throw ConfigError(std::string("fixture: ") + e.what());
  }
  return f;
}

RunConfig parse_run_config(const json& doc) {
  RunConfig r;
  r.raw = doc;
  r.fixture = parse_fixture(doc);
  r.jobs = static_cast<unsigned>(positive_int(doc, "jobs", 1));
  r.seed = value_or<std::uint64_t>(doc, "seed", 1);
  try {
    if (doc.contains("williamson")) r.williamson = parse_williamson(section(doc, "williamson"));
    if (doc.contains("converge")) r.converge = parse_converge(section(doc, "converge"));
    if (doc.contains("simulate")) r.simulate = parse_simulate(section(doc, "simulate"), r.fixture.base.dim());
    if (doc.contains("census")) r.census = parse_census(section(doc, "census"));
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
  return r;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
  RunConfig r = parse_run_config(doc);
  r.source = path;
  return r;
}

}  // namespace magflow
