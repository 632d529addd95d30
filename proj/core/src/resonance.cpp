#include "magflow/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "magflow/errors.hpp"

namespace magflow {

namespace {

// relation(i, j) for i > j: the multiple n with a_i = n a_j, or 0.
using Relation = std::vector<std::vector<int>>;

Relation relation_at(const Eigen::VectorXd& a, const ResonanceOptions& opt) {
  const auto p = static_cast<int>(a.size());
  Relation rel(p, std::vector<int>(p, 0));
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < i; ++j)
      rel[i][j] = integer_multiple(a(i), a(j), opt.max_multiple, opt.rel_tol).value_or(0);
  return rel;
}

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::optional<int> integer_multiple(double big, double small, int max_multiple, double rel_tol) {
  if (!(small > 0.0) || !(big > 0.0)) return std::nullopt;
  const double ratio = big / small;
  if (ratio > static_cast<double>(max_multiple) + 1.0) return std::nullopt;
  const auto nearest = static_cast<long>(std::llround(ratio));
  for (long n = std::max(1L, nearest - 1); n <= nearest + 1; ++n) {
    if (n > max_multiple) break;
    if (std::abs(big - static_cast<double>(n) * small) <= rel_tol * big) return static_cast<int>(n);
  }
  return std::nullopt;
}

std::vector<int> ResonancePartition::class_sizes() const {
  std::vector<int> sizes;
  sizes.reserve(classes.size());
  for (const auto& c : classes) sizes.push_back(static_cast<int>(c.size()));
  return sizes;
}

ResonancePartition classify_resonance(std::span<const SpectrumSample> samples,
                                      const ResonanceOptions& options) {
  if (samples.empty()) throw InvalidArgument("classify_resonance: no samples");
  if (options.max_multiple < 1) throw InvalidArgument("classify_resonance: max_multiple < 1");
  const auto p = static_cast<int>(samples.front().eigenvalues.size());
  if (p == 0) throw InvalidArgument("classify_resonance: empty spectrum");
  for (const auto& s : samples) {
    if (s.eigenvalues.size() != p)
      throw InvalidArgument("classify_resonance: inconsistent eigenvalue count");
    if (!(s.eigenvalues.minCoeff() > 0.0))
      throw InvalidArgument("classify_resonance: eigenvalues must be positive");
  }

  ResonancePartition out;
  out.max_multiple = options.max_multiple;
  out.rel_tol = options.rel_tol;

  const Relation reference = relation_at(samples.front().eigenvalues, options);
  DisjointSets sets(p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < i; ++j)
      if (reference[i][j] != 0) sets.unite(i, j);

  std::vector<std::vector<int>> by_root(p);
  for (int i = 0; i < p; ++i) by_root[sets.find(i)].push_back(i);
  for (auto& c : by_root)
    if (!c.empty()) out.classes.push_back(std::move(c));

  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto& a = samples[k].eigenvalues;
    for (int i = 1; i < p; ++i)
      if (a(i) - a(i - 1) <= options.rel_tol * a(i)) {
        ++out.crossings;
        break;
      }
    if (k == 0 || !out.grc_satisfied) continue;
    const Relation rel = relation_at(a, options);
    for (int i = 0; i < p && out.grc_satisfied; ++i)
      for (int j = 0; j < i; ++j) {
        if (rel[i][j] == reference[i][j]) continue;
        ResonanceWitness w;
        w.reference_sample = 0;
        w.violating_sample = k;
        w.reference_point = samples.front().base_point;
        w.violating_point = samples[k].base_point;
        w.larger_index = i;
        w.smaller_index = j;
        w.reference_multiple = reference[i][j];
        w.violating_multiple = rel[i][j];
        w.reference_values[0] = samples.front().eigenvalues(i);
        w.reference_values[1] = samples.front().eigenvalues(j);
        w.violating_values[0] = a(i);
        w.violating_values[1] = a(j);
        out.witness = w;
        out.grc_satisfied = false;
        break;
      }
  }
  return out;
}

std::vector<StableSet> stable_eigenvalue_sets(const ResonancePartition& partition,
                                              std::span<const SpectrumSample> samples) {
  std::vector<StableSet> out;
  if (samples.empty()) return out;
  const ResonanceOptions opt{partition.max_multiple, partition.rel_tol};
  const auto p = static_cast<int>(samples.front().eigenvalues.size());
  const Relation reference = relation_at(samples.front().eigenvalues, opt);

  for (int c = 0; c < partition.q(); ++c) {
    const auto& members = partition.classes[c];
    std::vector<bool> inside(p, false);
    for (int m : members) inside[m] = true;

    bool stable = true;
    for (const auto& s : samples) {
      const auto& a = s.eigenvalues;
      const Relation rel = relation_at(a, opt);
      for (std::size_t x = 0; x < members.size() && stable; ++x)
        for (std::size_t y = 0; y < x; ++y) {
          const int i = std::max(members[x], members[y]);
          const int j = std::min(members[x], members[y]);
          if (rel[i][j] != reference[i][j]) stable = false;
        }
      for (int e = 0; e < p && stable; ++e) {
        if (inside[e]) continue;
        for (int m : members)
          if (integer_multiple(a(e), a(m), opt.max_multiple, opt.rel_tol)) {
            stable = false;
            break;
          }
      }
      if (!stable) break;
    }
    if (stable) out.push_back({c, static_cast<int>(members.size())});
  }
  return out;
}

}  // namespace magflow
