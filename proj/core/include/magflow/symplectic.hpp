#pragma once

// Linear symplectic algebra on a single fibre: validated form types, the
// symplectic orthogonal complement and the Williamson normal form.

#include <vector>

#include <Eigen/Dense>

namespace magflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Standard block form J = [[0, -I], [I, 0]] on R^{2p}.
Matrix standard_symplectic(Eigen::Index p);

/// An antisymmetric, nondegenerate 2p x 2p matrix. The bilinear form is
/// omega(u, v) = u^T M v.
class SymplecticMatrix {
 public:
  static constexpr double kDefaultDetTol = 1e-12;

  explicit SymplecticMatrix(Matrix entries, double det_tol = kDefaultDetTol);

  static SymplecticMatrix standard(Eigen::Index p);

  const Matrix& matrix() const noexcept { return m_; }
  Eigen::Index dim() const noexcept { return m_.rows(); }
  Eigen::Index half_dim() const noexcept { return m_.rows() / 2; }

  double operator()(const Vector& u, const Vector& v) const { return u.dot(m_ * v); }

 private:
  Matrix m_;
};

/// Symmetric positive-definite form Q(y) = y^T A y.
class QuadraticForm {
 public:
  static constexpr double kDefaultTol = 1e-12;

  explicit QuadraticForm(Matrix entries, double tol = kDefaultTol);

  const Matrix& matrix() const noexcept { return a_; }
  Eigen::Index dim() const noexcept { return a_.rows(); }

  double operator()(const Vector& y) const { return y.dot(a_ * y); }

 private:
  Matrix a_;
};

struct WilliamsonOptions {
  /// Relative gap below which adjacent symplectic eigenvalues are treated as
  /// one cluster.
  double separation_tol = 1e-8;
};

/// Normal form T with T^T Omega T = J and T^T A T = diag(a, a).
struct WilliamsonResult {
  Vector eigenvalues;  ///< a_1 <= ... <= a_p, all positive
  Matrix basis;        ///< columns are the coordinate vectors y_1..y_{2p}
  /// Groups of eigenvalue indices (0-based) closer than the separation
  /// tolerance. Only groups with two or more members are listed; the basis
  /// within such a group is not unique.
  std::vector<std::vector<int>> clusters;

  bool clustered() const noexcept { return !clusters.empty(); }
};

/// Omega-orthogonal complement {v : v^T Omega w = 0 for all w in span(subspace)}.
/// Returns an orthonormal basis (as columns). Throws DegenerateFormError when
/// Omega restricted to the subspace is singular.
Matrix symplectic_complement(const Matrix& omega, const Matrix& subspace, double tol = 1e-12);

WilliamsonResult williamson(const SymplecticMatrix& omega, const QuadraticForm& form,
                            const WilliamsonOptions& options = {});

/// Residuals of a Williamson result against its defining identities and
/// against the spectrum of Omega^{-1} A, whose eigenvalues are +-i a_j.
struct WilliamsonCheck {
  double symplectic_residual = 0.0;  ///< |T^T Omega T - J|_max
  double form_residual = 0.0;        ///< |T^T A T - diag(a, a)|_max / max a
  double eigenvalue_error = 0.0;     ///< max relative error against the oracle
};

WilliamsonCheck check_williamson(const SymplecticMatrix& omega, const QuadraticForm& form,
                                 const WilliamsonResult& result);

}  // namespace magflow
