#include "magflow/predictions.hpp"

#include <algorithm>
#include <numeric>

#include "magflow/errors.hpp"

namespace magflow {

int bound_main(int q, int cuplength, int n, int m) {
  if (q < 1) throw InvalidArgument("bound_main: q must be at least 1");
  if (m < 0 || n <= m) throw InvalidArgument("bound_main: requires n > m >= 0");
  if (cuplength < 0) throw InvalidArgument("bound_main: negative cuplength");
  return q * cuplength + (n - m);
}

int bound_magnetic(int q, int cuplength, int m) {
  if (m < 1) throw InvalidArgument("bound_magnetic: requires m >= 1");
  return bound_main(q, cuplength, 2 * m, m);
}

int bound_stable_set(int cuplength, int order) {
  if (cuplength < 0 || order < 1) throw InvalidArgument("bound_stable_set: invalid arguments");
  return cuplength + order;
}

std::vector<int> per_class_bound(const std::vector<int>& class_sizes, int cuplength) {
  std::vector<int> out;
  out.reserve(class_sizes.size());
  for (int k : class_sizes) out.push_back(bound_stable_set(cuplength, k));
  return out;
}

int BoundReport::census_bound() const {
  if (grc_satisfied) return std::max(bound_main, bound_surface);
  return std::accumulate(stable_set_bounds.begin(), stable_set_bounds.end(), 0);
}

BoundReport make_bound_report(const ResonancePartition& partition, const std::vector<int>& stable_orders,
                              int cuplength, int crit, int n, int m) {
  BoundReport r;
  r.q = partition.q();
  r.n = n;
  r.m = m;
  r.p = n - m;
  r.cuplength = cuplength;
  r.crit = crit;
  r.grc_satisfied = partition.grc_satisfied;
  r.bound_main = bound_main(r.q, cuplength, n, m);
  r.bound_magnetic = n == 2 * m ? bound_magnetic(r.q, cuplength, m) : 0;
  r.bound_surface = r.p == 1 && m == 1 ? crit : 0;
  r.per_class = per_class_bound(partition.class_sizes(), cuplength);
  for (int order : stable_orders) r.stable_set_bounds.push_back(bound_stable_set(cuplength, order));
  r.bound_conjectured = r.p * (cuplength + 1);
  return r;
}

}  // namespace magflow
