#pragma once

// Integer-dependence classes of symplectic eigenvalues sampled over a base
// manifold, and the global consistency check of that dependence pattern.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace magflow {

struct SpectrumSample {
  Eigen::VectorXd base_point;
  Eigen::VectorXd eigenvalues;  ///< positive, ascending
};

struct ResonanceOptions {
  int max_multiple = 16;
  double rel_tol = 1e-8;
};

/// Smallest n in [1, max_multiple] with |big - n*small| <= rel_tol*big, if any.
std::optional<int> integer_multiple(double big, double small, int max_multiple, double rel_tol);

/// Where the dependence pattern of the first sample breaks.
struct ResonanceWitness {
  std::size_t reference_sample = 0;
  std::size_t violating_sample = 0;
  Eigen::VectorXd reference_point;
  Eigen::VectorXd violating_point;
  int larger_index = 0;   ///< i in a_i = n a_j (0-based, i > j)
  int smaller_index = 0;  ///< j
  int reference_multiple = 0;  ///< n at the reference sample (0 = independent)
  int violating_multiple = 0;  ///< n at the violating sample (0 = independent)
  double reference_values[2] = {0.0, 0.0};  ///< (a_i, a_j)
  double violating_values[2] = {0.0, 0.0};
};

struct ResonancePartition {
  /// Eigenvalue index groups (0-based), each ascending, ordered by first member.
  std::vector<std::vector<int>> classes;
  bool grc_satisfied = true;
  std::optional<ResonanceWitness> witness;
  int max_multiple = 16;
  double rel_tol = 1e-8;
  /// Number of samples where two eigenvalues coincide within rel_tol.
  std::size_t crossings = 0;

  int q() const noexcept { return static_cast<int>(classes.size()); }
  std::vector<int> class_sizes() const;
};

ResonancePartition classify_resonance(std::span<const SpectrumSample> samples,
                                      const ResonanceOptions& options = {});

struct StableSet {
  int class_index = 0;
  int order = 0;
};

/// Classes that remain integer dependent at every sample and of which no other
/// eigenvalue is an integer multiple anywhere. Each yields CL + order orbits.
std::vector<StableSet> stable_eigenvalue_sets(const ResonancePartition& partition,
                                              std::span<const SpectrumSample> samples);

}  // namespace magflow
