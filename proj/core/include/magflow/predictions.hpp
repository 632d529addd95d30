#pragma once

// Orbit-count lower bounds from resonance data and topology constants.

#include <vector>

#include "magflow/resonance.hpp"

namespace magflow {

/// q * CL + (n - m). Requires q >= 1 and n > m >= 0.
int bound_main(int q, int cuplength, int n, int m);
/// q * CL + m, the magnetic case n = 2m.
int bound_magnetic(int q, int cuplength, int m);
/// CL + r for a stable eigenvalue set of order r.
int bound_stable_set(int cuplength, int order);
/// CL + (k_i - k_{i-1}) for each class size.
std::vector<int> per_class_bound(const std::vector<int>& class_sizes, int cuplength);

struct BoundReport {
  int q = 0;
  int p = 0;  ///< n - m
  int n = 0;
  int m = 0;
  int cuplength = 0;
  int crit = 0;
  bool grc_satisfied = true;
  int bound_main = 0;
  int bound_magnetic = 0;
  int bound_surface = 0;  ///< Crit(M) when the fibre is two dimensional, else 0
  std::vector<int> per_class;
  std::vector<int> stable_set_bounds;
  /// (n - m)(CL + 1); reported only, never asserted.
  int bound_conjectured = 0;

  /// The bound a census compares against.
  int census_bound() const;
};

/// n and m are half-dimensions: dim N = 2n, dim M = 2m.
BoundReport make_bound_report(const ResonancePartition& partition, const std::vector<int>& stable_orders,
                              int cuplength, int crit, int n, int m);

}  // namespace magflow
