#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "magflow/dynamics.hpp"
#include "magflow/errors.hpp"
#include "oracles.hpp"

using namespace magflow;

namespace {

constexpr double kPi = std::numbers::pi;

BaseManifold torus(int dim) {
  BaseManifold b;
  b.name = "T" + std::to_string(dim);
  b.periods.assign(dim, 2.0 * kPi);
  b.cuplength = dim;
  b.crit_lower_bound = dim + 1;
  return b;
}

TwistedPhaseSpace flat_t2(double b) { return {torus(2), MetricField::identity(2), MagneticForm::blocks({b})}; }

TwistedPhaseSpace perturbed_t2() {
  return {torus(2), MetricField::identity(2), MagneticForm::modulated({2.0}, {1.0}, {0})};
}

TwistedPhaseSpace kahler_t4() {
  const MagneticForm w = MagneticForm::blocks({1.0, 1.0});
  return {torus(4), MetricField::compatible(w(Vector::Zero(4)), 0.3), w};
}

Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Vector::NullaryExpr(n, [&](Eigen::Index) { return u(rng); });
}

/// Gradient of H by central differences, independent of the analytic one.
Vector fd_gradient(const TwistedPhaseSpace& s, const Vector& x) {
  const Eigen::Index d = s.base_dim();
  Vector g(2 * d);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < 2 * d; ++i) {
    Vector a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (s.hamiltonian(a.head(d), a.tail(d)) - s.hamiltonian(b.head(d), b.tail(d))) / (2 * h);
  }
  return g;
}

/// Linear map y -> limiting_field(q, y) as a matrix.
Matrix limiting_matrix(const TwistedPhaseSpace& s, const Vector& q) {
  const Eigen::Index d = s.base_dim();
  Matrix l(d, d);
  for (Eigen::Index j = 0; j < d; ++j) l.col(j) = limiting_field(s, q, Vector::Unit(d, j));
  return l;
}

Vector rk4_linear(const Matrix& l, Vector y, double t, int steps) {
  const double h = t / steps;
  for (int i = 0; i < steps; ++i) {
    const Vector k1 = l * y, k2 = l * (y + 0.5 * h * k1), k3 = l * (y + 0.5 * h * k2), k4 = l * (y + h * k3);
    y += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return y;
}

}  // namespace

TEST(HamiltonianField, VanishesOnZeroSection) {
  std::mt19937_64 rng(1);
  for (const auto& s : {flat_t2(1.0), perturbed_t2(), kahler_t4()}) {
    const Vector q = random_vector(s.base_dim(), rng, 0.0, 6.0);
    EXPECT_EQ(hamiltonian_field(s, q, Vector::Zero(s.base_dim())).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(HamiltonianField, FlatTorusRotation) {
  const double b = 1.7;
  const auto s = flat_t2(b);
  const Vector q = Eigen::Vector2d(0.3, 2.0);
  const Vector p = Eigen::Vector2d(0.6, -0.2);
  const Vector x = hamiltonian_field(s, q, p);
  EXPECT_NEAR(x(0), p(0), 1e-15);
  EXPECT_NEAR(x(1), p(1), 1e-15);
  EXPECT_NEAR(x(2), b * p(1), 1e-15);
  EXPECT_NEAR(x(3), -b * p(0), 1e-15);
}

TEST(HamiltonianField, SolvesTwistedSystem) {
  std::mt19937_64 rng(2);
  for (const auto& s : {perturbed_t2(), kahler_t4()}) {
    const Eigen::Index d = s.base_dim();
    for (int k = 0; k < 1000; ++k) {
      const Vector q = random_vector(d, rng, 0.0, 2 * kPi);
      const Vector p = random_vector(d, rng, -1.0, 1.0);
      const Vector x = hamiltonian_field(s, q, p);
      const Vector grad = s.hamiltonian_gradient(q, p);
      EXPECT_LE((s.twisted_form_matrix(q) * x - grad).norm(), 1e-12 * grad.norm());
    }
  }
}

TEST(HamiltonianField, MatchesDirectSolveWithFiniteDifferenceGradient) {
  std::mt19937_64 rng(3);
  const auto s = kahler_t4();
  for (int k = 0; k < 50; ++k) {
    Vector x(8);
    x << random_vector(4, rng, 0.0, 2 * kPi), random_vector(4, rng, -1.0, 1.0);
    const Vector ref = s.twisted_form_matrix(x.head(4)).partialPivLu().solve(fd_gradient(s, x));
    EXPECT_LT((hamiltonian_field(s, x) - ref).norm(), 1e-7);
  }
}

TEST(Integrate, CyclotronClosureAndRadius) {
  const auto s = flat_t2(1.0);
  const Eigen::Vector2d q0(1.0, 1.0), p0(1.0, 0.0);  // E = 1/2
  for (auto method : {IntegratorMethod::rk4, IntegratorMethod::dopri5}) {
    IntegratorConfig cfg;
    cfg.method = method;
    cfg.step = 1e-3;
    const Trajectory traj = integrate(s, {q0, p0, 0.0}, 2 * kPi, cfg);
    ASSERT_FALSE(traj.truncated);
    const auto& end = traj.states.back();
    EXPECT_NEAR(end.t, 2 * kPi, 1e-12);
    EXPECT_LT(s.base().difference(end.q, q0).norm(), 1e-6);
    EXPECT_LT((end.p - p0).norm(), 1e-6);
    const Eigen::Vector2d centre = oracle::guiding_centre(q0, p0, 1.0);
    double worst = 0.0;
    for (const auto& st : traj.states) {
      const Eigen::Vector4d exact = oracle::cyclotron(q0, p0, 1.0, st.t);
      EXPECT_LT(s.base().difference(st.q, exact.head<2>()).norm(), 1e-6);
      const double r = s.base().difference(st.q, centre).norm();
      worst = std::max(worst, std::abs(r - std::sqrt(2 * 0.5) / 1.0));
    }
    EXPECT_LT(worst, 1e-6);
    EXPECT_FALSE(traj.drift_flagged);
  }
}

TEST(Integrate, UntwistedFlowIsStraightLine) {
  const TwistedPhaseSpace s(torus(2), MetricField::identity(2), MagneticForm::blocks({0.0}));
  const Eigen::Vector2d q0(0.5, 0.5), p0(0.7, -0.3);
  const Trajectory traj = integrate(s, {q0, p0, 0.0}, 10.0);
  for (const auto& st : traj.states) {
    EXPECT_LT(s.base().difference(st.q, q0 + st.t * p0).norm(), 1e-10);
    EXPECT_LT((st.p - p0).norm(), 1e-15);
  }
}

TEST(Integrate, EnergyDriftOnPerturbedField) {
  const auto s = perturbed_t2();
  IntegratorConfig cfg;
  cfg.sample_every = 100;
  const Trajectory traj = integrate(s, {Eigen::Vector2d(0.2, 1.0), Eigen::Vector2d(0.8, 0.5), 0.0}, 100.0, cfg);
  EXPECT_LE(traj.max_drift(), 1e-6);
  EXPECT_FALSE(traj.drift_flagged);
  EXPECT_EQ(traj.states.size(), 1001u);
  for (std::size_t i = 1; i < traj.states.size(); ++i) EXPECT_GT(traj.states[i].t, traj.states[i - 1].t);
}

TEST(Integrate, ReversibleWithinDrift) {
  const auto s = perturbed_t2();
  const Vector x0 = (Vector(4) << 0.2, 1.0, 0.8, 0.5).finished();
  const Vector fwd = flow(s, x0, 10.0, 10000);
  const Vector back = flow(s, fwd, -10.0, 10000);
  const Trajectory traj = integrate(s, PhaseState::unpack(x0), 10.0);
  EXPECT_LT((back - x0).norm(), std::max(10 * traj.max_drift(), 1e-12));
}

TEST(Integrate, NonFiniteStateTruncates) {
  const MagneticForm bad([](const Vector& q) {
    Matrix w = Matrix::Zero(2, 2);
    const double c = q(0) > 1.0 ? std::nan("") : 1.0;
    w(0, 1) = c;
    w(1, 0) = -c;
    return w;
  });
  const TwistedPhaseSpace s(torus(2), MetricField::identity(2), bad);
  const Trajectory traj = integrate(s, {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 0.0), 0.0}, 5.0);
  EXPECT_TRUE(traj.truncated);
  EXPECT_FALSE(traj.error.empty());
  EXPECT_LT(traj.states.back().t, 5.0);
}

TEST(Integrate, RejectsBadArguments) {
  const auto s = flat_t2(1.0);
  const PhaseState x{Vector::Zero(2), Vector::Zero(2), 0.0};
  EXPECT_THROW(integrate(s, x, 0.0), InvalidArgument);
  IntegratorConfig cfg;
  cfg.step = -1.0;
  EXPECT_THROW(integrate(s, x, 1.0, cfg), InvalidArgument);
}

TEST(Integrate, CsvExport) {
  const auto s = flat_t2(1.0);
  IntegratorConfig cfg;
  cfg.step = 0.5;
  const Trajectory traj = integrate(s, {Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 0.0), 0.0}, 1.0, cfg);
  std::ostringstream out;
  write_trajectory_csv(out, traj, {{"method", "rk4"}});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, R"(# {"method":"rk4"})");
  std::getline(in, line);
  EXPECT_EQ(line, "t,q0,q1,p0,p1,H");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(RescaledField, ZeroFibreGivesZero) {
  for (double eps : {0.5, 0.1, 0.01}) {
    const Vector x = rescaled_field(perturbed_t2(), {eps}, Eigen::Vector2d(1.0, 2.0), Vector::Zero(2));
    EXPECT_EQ(x.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(RescaledField, UnitEpsilonIsHamiltonianField) {
  const auto s = kahler_t4();
  std::mt19937_64 rng(4);
  RescaleConfig cfg{1.0, 1.0};
  for (int k = 0; k < 20; ++k) {
    const Vector q = random_vector(4, rng, 0.0, 2 * kPi), y = random_vector(4, rng, -1.0, 1.0);
    EXPECT_EQ(rescaled_field(s, cfg, q, y), hamiltonian_field(s, q, y));
    cfg.inverse_square_clock = true;
    EXPECT_EQ(rescaled_field(s, cfg, q, y), hamiltonian_field(s, q, y));
    cfg.inverse_square_clock = false;
  }
}

TEST(RescaledField, IsPushforwardOfFlow) {
  // d/dt Phi^{-1}(phi_t(Phi(q, y))) at t = 0 by central differences of the flow.
  const auto s = kahler_t4();
  std::mt19937_64 rng(5);
  for (double eps : {0.3, 0.05}) {
    const Vector q = random_vector(4, rng, 0.0, 2 * kPi), y = random_vector(4, rng, -1.0, 1.0);
    Vector x(8);
    x << q, eps * y;
    const double h = 1e-4;
    Vector diff = (flow(s, x, h, 1) - flow(s, x, -h, 1)) / (2 * h);
    diff.tail(4) /= eps;
    const Vector ref = rescaled_field(s, {eps}, q, y);
    EXPECT_LT((diff - ref).norm(), 1e-6 * ref.norm());
    RescaleConfig slow{eps, 0.5, true};
    EXPECT_LT((diff / (eps * eps) - rescaled_field(s, slow, q, y)).norm(), 1e-6 * ref.norm() / (eps * eps));
  }
}

TEST(RescaledField, BaseComponentShrinks) {
  const auto flat = flat_t2(1.0);
  const auto curved = kahler_t4();
  const Vector q2 = Eigen::Vector2d(0.4, 1.0), y2 = Eigen::Vector2d(0.6, 0.8);
  const Vector q4 = (Vector(4) << 0.4, 1.0, 2.0, 3.0).finished();
  const Vector y4 = (Vector(4) << 0.6, 0.8, -0.3, 0.2).finished();
  double prev_plain = 0.0, prev_gc = 0.0;
  for (double eps : {0.2, 0.1, 0.05}) {
    // Flat: |q'| / |y'| = eps |y| / (B |y|) and the guiding-centre drift is zero.
    EXPECT_NEAR(base_fibre_ratio(flat, {eps}, q2, y2), eps, 1e-14);
    EXPECT_LT(base_fibre_ratio(flat, {eps}, q2, y2, true), 1e-14);
    const double plain = base_fibre_ratio(curved, {eps}, q4, y4);
    const double gc = base_fibre_ratio(curved, {eps}, q4, y4, true);
    if (prev_plain > 0.0) {
      EXPECT_NEAR(plain / prev_plain, 0.5, 0.05);
      EXPECT_NEAR(gc / prev_gc, 0.25, 0.03);
    }
    prev_plain = plain;
    prev_gc = gc;
  }
}

TEST(RescaleConfig, Validation) {
  EXPECT_THROW((RescaleConfig{0.0}.validate()), InvalidArgument);
  EXPECT_THROW((RescaleConfig{0.6}.validate()), InvalidArgument);
  EXPECT_NO_THROW((RescaleConfig{0.5}.validate()));
}

TEST(LimitingField, ZeroAtZero) {
  EXPECT_EQ(limiting_field(perturbed_t2(), Eigen::Vector2d(1.0, 1.0), Vector::Zero(2)).norm(), 0.0);
}

TEST(LimitingField, AgreesWithNormalForm) {
  std::mt19937_64 rng(6);
  for (const auto& s : {flat_t2(2.0), perturbed_t2(), kahler_t4()}) {
    const Eigen::Index d = s.base_dim();
    for (int k = 0; k < 20; ++k) {
      const Vector q = random_vector(d, rng, 0.0, 2 * kPi), y = random_vector(d, rng, -1.0, 1.0);
      const Vector a = limiting_field(s, q, y);
      EXPECT_LT((a - limiting_field_normal_form(s, q, y)).norm(), 1e-12 * (1.0 + a.norm()));
    }
  }
}

TEST(LimitingField, PeriodIsPiOverA) {
  const auto s = perturbed_t2();
  for (double x : {0.1, 1.5, 4.0}) {
    const Vector q = Eigen::Vector2d(x, 0.0);
    const Matrix w = s.magnetic()(q);
    // a from the hand-computed complement: Omega^F = -omega, A = 1/2 omega^T omega.
    const double a = oracle::imaginary_spectrum(-w, 0.5 * w.transpose() * w)(0);
    const Matrix l = limiting_matrix(s, q);
    const Vector y0 = Eigen::Vector2d(0.3, -0.4);
    EXPECT_LT((rk4_linear(l, y0, kPi / a, 4000) - y0).norm(), 1e-10);
    EXPECT_GT((rk4_linear(l, y0, 0.5 * kPi / a, 4000) - y0).norm(), 0.1);
  }
}

TEST(LimitingField, FlatTorusPeriodMatchesOracle) {
  const auto s = flat_t2(1.0);
  const Matrix w = s.magnetic()(Vector::Zero(2));
  const double a = oracle::imaginary_spectrum(-w, 0.5 * w.transpose() * w)(0);
  const FibreData fd = fibre_data(s, Vector::Zero(2));
  EXPECT_NEAR(kPi / williamson(fd.omega_f, fd.form).eigenvalues(0), kPi / a, 1e-10);
  EXPECT_NEAR(kPi / a, 2 * kPi, 1e-12);
}

TEST(LimitingField, PreservesTransverseHessian) {
  const auto s = kahler_t4();
  const Vector q = (Vector(4) << 0.7, 1.3, 0.0, 0.0).finished();
  const FibreData fd = fibre_data(s, q);
  const Vector a = williamson(fd.omega_f, fd.form).eigenvalues;
  const Matrix l = limiting_matrix(s, q);
  const Matrix to_a = fd.to_vertical.inverse();
  auto energy = [&](const Vector& y) { return fd.form(to_a * y); };
  Vector y = (Vector(4) << 0.3, -0.1, 0.5, 0.2).finished();
  const double e0 = energy(y);
  const double period = kPi / a.minCoeff();
  const int chunks = 16;
  for (int c = 0; c < chunks; ++c) {
    y = rk4_linear(l, y, period / chunks, 400);
    EXPECT_NEAR(energy(y), e0, 1e-10);
  }
}

TEST(ConvergenceGap, FlatTorusHalvesWithEpsilon) {
  const auto s = flat_t2(1.0);
  SampleRegion region{Vector::Zero(2), Vector::Constant(2, 2 * kPi), 1.0};
  double prev = 0.0;
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    const ConvergenceGap gap = convergence_gap(s, {eps}, region, 256);
    // Linear in p: the fibre part of the limit is exact.
    EXPECT_LT(gap.fibre, 1e-14);
    if (prev > 0.0) {
      EXPECT_LT(gap.total, prev);
      EXPECT_LE(gap.total / prev, 0.6);
    }
    prev = gap.total;
  }
}

TEST(ConvergenceGap, CurvedFixtureDecreases) {
  for (const auto& s : {perturbed_t2(), kahler_t4()}) {
    const Eigen::Index d = s.base_dim();
    SampleRegion region{Vector::Zero(d), Vector::Constant(d, 2 * kPi), 1.0};
    double prev = 0.0;
    for (double eps : {0.2, 0.1, 0.05, 0.025}) {
      const double gap = convergence_gap(s, {eps}, region, 128).total;
      if (prev > 0.0) {
        EXPECT_LE(gap / prev, 0.6);
      }
      prev = gap;
    }
  }
}

TEST(ConvergenceGap, DeterministicForSeed) {
  const auto s = perturbed_t2();
  SampleRegion region{Vector::Zero(2), Vector::Constant(2, 2 * kPi), 1.0};
  EXPECT_EQ(convergence_gap(s, {0.1}, region, 64, 9).total, convergence_gap(s, {0.1}, region, 64, 9).total);
  EXPECT_THROW(convergence_gap(s, {0.1}, {Vector::Zero(1), Vector::Zero(1), 1.0}, 4), InvalidArgument);
}
