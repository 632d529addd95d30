#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "magflow/resonance.hpp"

using namespace magflow;

namespace {

std::vector<SpectrumSample> constant_spectrum(const std::vector<double>& values, int n = 16) {
  std::vector<SpectrumSample> out;
  for (int k = 0; k < n; ++k) {
    SpectrumSample s;
    s.base_point = Eigen::Vector2d(0.1 * k, 0.0);
    s.eigenvalues = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    out.push_back(s);
  }
  return out;
}

/// Brute-force dependence test used as the oracle for witnesses.
bool dependent(double big, double small, int max_multiple, double rel_tol) {
  for (int n = 1; n <= max_multiple; ++n)
    if (std::abs(big - n * small) <= rel_tol * big) return true;
  return false;
}

}  // namespace

TEST(IntegerMultiple, FindsSmallestMultiple) {
  EXPECT_EQ(integer_multiple(3.0, 1.0, 16, 1e-8), 3);
  EXPECT_EQ(integer_multiple(1.0, 1.0, 16, 1e-8), 1);
  EXPECT_FALSE(integer_multiple(std::sqrt(2.0), 1.0, 16, 1e-8).has_value());
  EXPECT_FALSE(integer_multiple(17.0, 1.0, 16, 1e-8).has_value());
}

TEST(ClassifyResonance, RationalPairIsOneClass) {
  const auto samples = constant_spectrum({1.0, 2.0});
  const auto part = classify_resonance(samples);
  EXPECT_EQ(part.q(), 1);
  EXPECT_TRUE(part.grc_satisfied);
  ASSERT_EQ(part.classes.size(), 1u);
  EXPECT_EQ(part.classes[0], (std::vector<int>{0, 1}));
}

TEST(ClassifyResonance, IrrationalPairIsTwoClasses) {
  const auto samples = constant_spectrum({1.0, std::sqrt(2.0)});
  const auto part = classify_resonance(samples);
  EXPECT_EQ(part.q(), 2);
  EXPECT_TRUE(part.grc_satisfied);
  EXPECT_EQ(part.class_sizes(), (std::vector<int>{1, 1}));
}

TEST(ClassifyResonance, BrokenPatternReportsWitness) {
  auto samples = constant_spectrum({1.0, 2.0});
  for (std::size_t k = samples.size() / 2; k < samples.size(); ++k) samples[k].eigenvalues(1) = 2.3;
  const auto part = classify_resonance(samples);
  EXPECT_FALSE(part.grc_satisfied);
  ASSERT_TRUE(part.witness.has_value());
  const auto& w = *part.witness;
  EXPECT_EQ(w.larger_index, 1);
  EXPECT_EQ(w.smaller_index, 0);
  EXPECT_EQ(w.reference_multiple, 2);
  EXPECT_EQ(w.violating_multiple, 0);
  // Re-run the pairwise test at the witness samples.
  const auto& ref = samples[w.reference_sample].eigenvalues;
  const auto& bad = samples[w.violating_sample].eigenvalues;
  EXPECT_TRUE(dependent(ref(1), ref(0), 16, 1e-8));
  EXPECT_FALSE(dependent(bad(1), bad(0), 16, 1e-8));
  EXPECT_DOUBLE_EQ(w.reference_values[0], 2.0);
  EXPECT_DOUBLE_EQ(w.violating_values[0], 2.3);
}

TEST(ClassifyResonance, TransitiveClosureMergesChains) {
  // 1 ~ 2 ~ 6 form one class; 3 sqrt(7) stays alone.
  const auto part = classify_resonance(constant_spectrum({1.0, 2.0, 6.0, std::sqrt(7.0) * 3.0}));
  ASSERT_EQ(part.q(), 2);
  EXPECT_EQ(part.classes[0], (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(part.classes[1], (std::vector<int>{3}));
}

TEST(ClassifyResonance, PermutationInvariantInSampleOrder) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<SpectrumSample> samples;
  for (int k = 0; k < 40; ++k) {
    const double a = u(rng);
    SpectrumSample s;
    s.base_point = Eigen::Vector2d(k, 0.0);
    s.eigenvalues = Eigen::Vector3d(a, 3.0 * a, std::sqrt(3.0) * 5.0 * a);
    samples.push_back(s);
  }
  const auto reference = classify_resonance(samples);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(samples.begin(), samples.end(), rng);
    const auto part = classify_resonance(samples);
    EXPECT_EQ(part.classes, reference.classes);
    EXPECT_EQ(part.grc_satisfied, reference.grc_satisfied);
  }
}

TEST(ClassifyResonance, ScaleCovariant) {
  const auto base = constant_spectrum({1.0, 2.0, std::sqrt(5.0)});
  const auto reference = classify_resonance(base);
  for (double c : {1e-3, 0.37, 5.0, 1e4}) {
    auto scaled = base;
    for (auto& s : scaled) s.eigenvalues *= c;
    const auto part = classify_resonance(scaled);
    EXPECT_EQ(part.classes, reference.classes) << "c = " << c;
    EXPECT_EQ(part.q(), reference.q());
  }
}

TEST(ClassifyResonance, PartitionCoversAllIndicesOnce) {
  const auto part = classify_resonance(constant_spectrum({1.0, std::sqrt(2.0), 2.0, 3.0 * std::sqrt(2.0)}));
  std::vector<int> seen;
  for (const auto& c : part.classes) seen.insert(seen.end(), c.begin(), c.end());
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, (std::vector<int>{0, 1, 2, 3}));
  EXPECT_EQ(part.q(), 2);
}

TEST(ClassifyResonance, CountsCrossings) {
  auto samples = constant_spectrum({1.0, std::sqrt(2.0)}, 4);
  samples[2].eigenvalues(1) = 1.0;
  const auto part = classify_resonance(samples);
  EXPECT_EQ(part.crossings, 1u);
  EXPECT_FALSE(part.grc_satisfied);
}

TEST(StableSets, SingleEigenvalueIsStable) {
  const auto samples = constant_spectrum({0.5});
  const auto part = classify_resonance(samples);
  const auto stable = stable_eigenvalue_sets(part, samples);
  ASSERT_EQ(stable.size(), 1u);
  EXPECT_EQ(stable[0].class_index, 0);
  EXPECT_EQ(stable[0].order, 1);
}

TEST(StableSets, IrrationalPairBothStable) {
  const auto samples = constant_spectrum({1.0, std::sqrt(2.0)});
  const auto stable = stable_eigenvalue_sets(classify_resonance(samples), samples);
  ASSERT_EQ(stable.size(), 2u);
  EXPECT_EQ(stable[0].order, 1);
  EXPECT_EQ(stable[1].order, 1);
}

TEST(StableSets, LinkedPairHasOrderTwo) {
  const auto samples = constant_spectrum({1.0, 2.0, std::sqrt(5.0)});
  const auto part = classify_resonance(samples);
  ASSERT_EQ(part.q(), 2);
  const auto stable = stable_eigenvalue_sets(part, samples);
  ASSERT_EQ(stable.size(), 2u);
  EXPECT_EQ(part.classes[stable[0].class_index], (std::vector<int>{0, 1}));
  EXPECT_EQ(stable[0].order, 2);
  EXPECT_EQ(part.classes[stable[1].class_index], (std::vector<int>{2}));
  EXPECT_EQ(stable[1].order, 1);
}

TEST(StableSets, OutsideMultipleDestabilizes) {
  // a_1 = 2 a_0 at the last sample only.
  auto samples = constant_spectrum({1.0, std::sqrt(2.0)});
  samples.back().eigenvalues(1) = 2.0;
  const auto part = classify_resonance(samples);
  EXPECT_FALSE(part.grc_satisfied);
  const auto stable = stable_eigenvalue_sets(part, samples);
  for (const auto& s : stable) EXPECT_NE(part.classes[s.class_index], (std::vector<int>{0}));
}
