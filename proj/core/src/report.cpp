#include "magflow/report.hpp"

#include <cmath>

namespace magflow {

using nlohmann::json;

namespace {

/// JSON has no infinities; encode non-finite values as null.
json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

json matrix_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vector_json(m.row(r).transpose()));
  return out;
}

json to_json(const WilliamsonResult& w) {
  return {{"eigenvalues", vector_json(w.eigenvalues)},
          {"basis", matrix_json(w.basis)},
          {"clusters", w.clusters},
          {"clustered", w.clustered()}};
}

json to_json(const WilliamsonCheck& c) {
  return {{"symplectic_residual", number(c.symplectic_residual)},
          {"form_residual", number(c.form_residual)},
          {"eigenvalue_error", number(c.eigenvalue_error)}};
}

json to_json(const ResonancePartition& p) {
  json out = {{"q", p.q()},
              {"classes", p.classes},
              {"class_sizes", p.class_sizes()},
              {"grc_satisfied", p.grc_satisfied},
              {"max_multiple", p.max_multiple},
              {"rel_tol", p.rel_tol},
              {"crossings", p.crossings},
              {"witness", nullptr}};
  if (p.witness) {
    const auto& w = *p.witness;
    out["witness"] = {{"reference_sample", w.reference_sample},
                      {"violating_sample", w.violating_sample},
                      {"reference_point", vector_json(w.reference_point)},
                      {"violating_point", vector_json(w.violating_point)},
                      {"larger_index", w.larger_index},
                      {"smaller_index", w.smaller_index},
                      {"reference_multiple", w.reference_multiple},
                      {"violating_multiple", w.violating_multiple},
                      {"reference_values", {w.reference_values[0], w.reference_values[1]}},
                      {"violating_values", {w.violating_values[0], w.violating_values[1]}}};
  }
  return out;
}

json to_json(const BoundReport& b) {
  return {{"q", b.q},
          {"p", b.p},
          {"n", b.n},
          {"m", b.m},
          {"CL", b.cuplength},
          {"Crit", b.crit},
          {"grc_satisfied", b.grc_satisfied},
          {"bound_main", b.bound_main},
          {"bound_magnetic", b.bound_magnetic},
          {"bound_surface", b.bound_surface},
          {"per_class", b.per_class},
          {"stable_set_bounds", b.stable_set_bounds},
          {"bound_conjectured", b.bound_conjectured},
          {"census_bound", b.census_bound()}};
}

json to_json(const SpectrumField& f) {
  json samples = json::array();
  for (std::size_t i = 0; i < f.points.size(); ++i)
    samples.push_back({{"q", vector_json(f.points[i])}, {"a", vector_json(f.eigenvalues[i])}});
  json range = json::array();
  if (!f.eigenvalues.empty()) {
    const Eigen::Index p = f.eigenvalues.front().size();
    for (Eigen::Index j = 0; j < p; ++j) {
      double lo = f.eigenvalues.front()(j), hi = lo;
      for (const auto& a : f.eigenvalues) {
        lo = std::min(lo, a(j));
        hi = std::max(hi, a(j));
      }
      range.push_back({{"min", lo}, {"max", hi}, {"relative_spread", (hi - lo) / hi}});
    }
  }
  return {{"samples", samples}, {"eigenvalue_range", range}, {"partition", to_json(f.partition)}};
}

json to_json(const ConvergenceGap& g) {
  return {{"total", number(g.total)}, {"fibre", number(g.fibre)}, {"base", number(g.base)}};
}

json to_json(const OrbitRecord& o) {
  json floquet = json::array();
  for (const auto& mu : o.floquet) floquet.push_back({number(mu.real()), number(mu.imag())});
  return {{"q", vector_json(o.representative.q)},
          {"p", vector_json(o.representative.p)},
          {"period", number(o.period)},
          {"energy", number(o.energy)},
          {"newton_residual", number(o.newton_residual)},
          {"iterations", o.iterations},
          {"floquet", floquet},
          {"floquet_distance_to_one", number(o.floquet_distance_to_one())},
          {"ds_residual", number(o.ds_residual)},
          {"seed_index", o.seed_index},
          {"class_index", o.class_index}};
}

json to_json(const CensusRow& r) {
  json orbits = json::array();
  for (const auto& o : r.orbits) orbits.push_back(to_json(o));
  return {{"epsilon", r.epsilon},
          {"seeds", r.seeds},
          {"converged", r.converged},
          {"distinct", r.distinct},
          {"bound", r.bound},
          {"pass", r.pass},
          {"convergence_rate", r.convergence_rate},
          {"period_window", {number(r.period_min), number(r.period_max)}},
          {"rejections", r.rejections},
          {"valid", r.valid},
          {"max_ds_residual", number(r.max_ds)},
          {"min_negative_control", number(r.min_negative_ds)},
          {"wall_seconds", r.wall_seconds},
          {"orbits", orbits}};
}

json to_json(const OrbitCensus& c) {
  json rows = json::array();
  for (const auto& r : c.rows) {
    json row = to_json(r);
    row["bound_report"] = to_json(c.bounds);
    rows.push_back(std::move(row));
  }
  return {{"rows", rows},
          {"bound_report", to_json(c.bounds)},
          {"partition", to_json(c.partition)},
          {"headline_epsilon", c.headline ? json(c.rows[*c.headline].epsilon) : json(nullptr)},
          {"validity_ok", c.validity_ok},
          {"pass", c.pass()}};
}

}  // namespace magflow
