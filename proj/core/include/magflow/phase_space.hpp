#pragma once

// Chart-level model of the base manifold M, the metric g, the magnetic 2-form
// omega and the twisted phase space (T*M, d lambda + pi^* omega).
//
// Conventions used throughout the library:
//   * phase points are (q, p) with lambda = sum p_i dq_i;
//   * the twisted form in (q, p) block coordinates is [[omega(q), -I], [I, 0]];
//   * Hamilton's equations read Omega(q) * X = grad H;
//   * H(q, p) = 1/2 p^T g(q)^{-1} p, so the transverse Hessian form at the zero
//     section is Q(y) = y^T A y with A = 1/2 g^{-1} in vertical coordinates.
//
// The fibrewise normalization of the twisted form is only realized at the
// zero section, through the linear complement (TM)^Omega; no Weinstein
// neighbourhood map is constructed.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magflow/resonance.hpp"
#include "magflow/symplectic.hpp"

namespace magflow {

/// Periodic box [0, L_1) x ... x [0, L_d) (flat torus family) or, with
/// periodic = false, a single-chart patch without wrap-around.
struct BaseManifold {
  std::string name;
  std::vector<double> periods;
  bool periodic = true;
  int cuplength = 0;          ///< CL(M), supplied by the fixture
  int crit_lower_bound = 0;   ///< Crit(M), supplied by the fixture

  Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(periods.size()); }
  Vector wrap(const Vector& q) const;
  /// a - b reduced to the nearest periodic image.
  Vector difference(const Vector& a, const Vector& b) const;
  void validate() const;
};

using MatrixField = std::function<Matrix(const Vector&)>;
using MatrixFieldDerivative = std::function<Matrix(const Vector&, Eigen::Index)>;

class MetricField {
 public:
  MetricField() = default;
  MetricField(MatrixField g, MatrixFieldDerivative dg = {}, double h_fd = 1e-5, bool constant = false);

  static MetricField identity(Eigen::Index dim, double scale = 1.0);
  static MetricField diagonal(const Vector& values);
  /// g(q) = S(q)^{-T} g0 S(q)^{-1} with g0 = (omega^T omega)^{1/2} and S(q)
  /// the Cayley transform of omega^{-1} K(q), K(q) symmetric. S is
  /// omega-symplectic, so g is compatible with the constant form omega.
  static MetricField compatible(const Matrix& omega, double amplitude);

  Matrix operator()(const Vector& q) const { return g_(q); }
  /// d g / d q_k (analytic when supplied, otherwise central differences).
  Matrix derivative(const Vector& q, Eigen::Index k) const;
  bool constant() const noexcept { return constant_; }
  double fd_step() const noexcept { return h_fd_; }

 private:
  MatrixField g_;
  MatrixFieldDerivative dg_;
  double h_fd_ = 1e-5;
  bool constant_ = false;
};

class MagneticForm {
 public:
  MagneticForm() = default;
  explicit MagneticForm(MatrixField omega, bool constant = false, double closed_tol = 1e-6);

  /// omega = sum_k c_k dq_{2k} ^ dq_{2k+1}.
  static MagneticForm blocks(const std::vector<double>& coefficients);
  /// Block coefficients c_k(q) = base_k + amplitude_k * sin(q[axis_k]).
  static MagneticForm modulated(const std::vector<double>& base, const std::vector<double>& amplitude,
                                const std::vector<int>& axis);

  Matrix operator()(const Vector& q) const { return omega_(q); }
  bool constant() const noexcept { return constant_; }
  double closed_tol() const noexcept { return closed_tol_; }

 private:
  MatrixField omega_;
  bool constant_ = false;
  double closed_tol_ = 1e-6;
};

/// (T*M, d lambda + pi^* omega) with the kinetic Hamiltonian of g.
class TwistedPhaseSpace {
 public:
  TwistedPhaseSpace(BaseManifold base, MetricField metric, MagneticForm magnetic);

  const BaseManifold& base() const noexcept { return base_; }
  const MetricField& metric() const noexcept { return metric_; }
  const MagneticForm& magnetic() const noexcept { return magnetic_; }

  Eigen::Index base_dim() const noexcept { return base_.dim(); }
  Eigen::Index phase_dim() const noexcept { return 2 * base_.dim(); }
  /// Fibre half-dimension p = n - m (equals m for T*M).
  Eigen::Index fibre_half_dim() const noexcept { return base_.dim() / 2; }

  /// g(q)^{-1}; throws SingularMetricError with the condition number.
  Matrix inverse_metric(const Vector& q) const;
  double hamiltonian(const Vector& q, const Vector& p) const;
  /// (dH/dq, dH/dp) stacked.
  Vector hamiltonian_gradient(const Vector& q, const Vector& p) const;
  Matrix twisted_form_matrix(const Vector& q) const;

 private:
  BaseManifold base_;
  MetricField metric_;
  MagneticForm magnetic_;
  double max_condition_ = 1e12;
  Matrix constant_inverse_;
  bool has_constant_inverse_ = false;
};

/// Omega^F and d^2_N H on the complement (TM)^Omega at (q, 0).
struct FibreData {
  SymplecticMatrix omega_f;  ///< in the frame below
  QuadraticForm form;        ///< A with Q(a) = a^T A a
  /// 2d x d frame of (TM)^Omega: columns (e_i, omega(q) e_i), i.e. the
  /// coordinate a on the complement is its horizontal component.
  Matrix frame;
  /// Vertical (p) components of the frame columns: y = to_vertical * a.
  Matrix to_vertical;
};

FibreData fibre_data(const TwistedPhaseSpace& space, const Vector& q);

struct SpectrumField {
  std::vector<Vector> points;
  std::vector<Vector> eigenvalues;
  ResonancePartition partition;

  std::vector<SpectrumSample> samples() const;
};

/// Lexicographic grid with counts[i] points per axis, q_i = L_i * k / counts[i].
std::vector<Vector> grid_points(const BaseManifold& base, const std::vector<int>& counts);

SpectrumField eigenvalue_field(const TwistedPhaseSpace& space, const std::vector<Vector>& grid,
                               const ResonanceOptions& options = {}, unsigned jobs = 1);

/// Max over the grid of |d_i w_jk + d_j w_ki + d_k w_ij| by central differences.
double check_closed(const MagneticForm& magnetic, const std::vector<Vector>& grid, double h_fd);

}  // namespace magflow
