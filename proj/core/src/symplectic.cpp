#include "magflow/symplectic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "magflow/errors.hpp"

namespace magflow {

namespace {

bool exactly_antisymmetric(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i; j < m.cols(); ++j)
      if (m(i, j) != -m(j, i)) return false;
  return true;
}

bool exactly_symmetric(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

}  // namespace

Matrix standard_symplectic(Eigen::Index p) {
  Matrix j = Matrix::Zero(2 * p, 2 * p);
  j.topRightCorner(p, p) = -Matrix::Identity(p, p);
  j.bottomLeftCorner(p, p) = Matrix::Identity(p, p);
  return j;
}

SymplecticMatrix::SymplecticMatrix(Matrix entries, double det_tol) : m_(std::move(entries)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0 || m_.rows() % 2 != 0)
    throw InvalidArgument("symplectic matrix must be square with even positive dimension");
  if (!exactly_antisymmetric(m_)) throw InvalidArgument("symplectic matrix is not antisymmetric");
  const double det = m_.determinant();
  if (!(std::abs(det) > det_tol)) {
    std::ostringstream msg;
    msg << "symplectic matrix is degenerate (|det| = " << std::abs(det) << ")";
    throw DegenerateFormError(msg.str(), m_);
  }
}

SymplecticMatrix SymplecticMatrix::standard(Eigen::Index p) {
  return SymplecticMatrix(standard_symplectic(p));
}

QuadraticForm::QuadraticForm(Matrix entries, double tol) : a_(std::move(entries)) {
  if (a_.rows() != a_.cols() || a_.rows() == 0)
    throw InvalidArgument("quadratic form must be square and nonempty");
  if (!exactly_symmetric(a_)) throw InvalidArgument("quadratic form is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a_, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > tol)) {
    std::ostringstream msg;
    msg << "quadratic form is not positive definite (min eigenvalue "
        << eig.eigenvalues().minCoeff() << ")";
    throw InvalidArgument(msg.str());
  }
}

Matrix symplectic_complement(const Matrix& omega, const Matrix& subspace, double tol) {
  const Eigen::Index n = omega.rows();
  if (omega.cols() != n || subspace.rows() != n)
    throw InvalidArgument("symplectic_complement: dimension mismatch");
  const Eigen::Index k = subspace.cols();
  if (k == 0) return Matrix::Identity(n, n);

  Eigen::JacobiSVD<Matrix> basis_svd(subspace);
  const auto& sv = basis_svd.singularValues();
  if (!(sv(k - 1) > tol * std::max(1.0, sv(0))))
    throw InvalidArgument("symplectic_complement: subspace columns are dependent");

  const Matrix gram = subspace.transpose() * omega * subspace;
  const double scale = omega.norm() * sv(0) * sv(0);
  Eigen::JacobiSVD<Matrix> gram_svd(gram);
  if (k % 2 != 0 || !(gram_svd.singularValues()(k - 1) > tol * scale)) {
    std::ostringstream msg;
    msg << "symplectic_complement: form is degenerate on the subspace; Gram matrix\n" << gram;
    throw DegenerateFormError(msg.str(), gram);
  }
  if (k == n) return Matrix(n, 0);

  // v lies in the complement iff (V^T Omega) v = 0.
  const Matrix constraints = subspace.transpose() * omega;
  Eigen::JacobiSVD<Matrix> svd(constraints, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(n - k);
}

WilliamsonResult williamson(const SymplecticMatrix& omega, const QuadraticForm& form,
                            const WilliamsonOptions& options) {
  const Eigen::Index dim = omega.dim();
  if (form.dim() != dim) throw InvalidArgument("williamson: dimension mismatch");
  const Eigen::Index p = dim / 2;

  // L = A^{-1/2}; with T = L U the problem becomes U^T U = diag, U^T S U = J
  // for the antisymmetric S = L Omega L.
  Eigen::SelfAdjointEigenSolver<Matrix> a_eig(form.matrix());
  const Matrix l = a_eig.eigenvectors() * a_eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
                   a_eig.eigenvectors().transpose();
  Matrix s = l * omega.matrix() * l;
  s = 0.5 * (s - s.transpose()).eval();

  // S^T S = -S^2 is symmetric PSD; its eigenvalues are s_i^2, each twice.
  Eigen::SelfAdjointEigenSolver<Matrix> s_eig(s.transpose() * s);
  const Vector s_vals = s_eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Matrix& w = s_eig.eigenvectors();

  // Clusters in descending s, i.e. ascending a = 1/s.
  std::vector<std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = dim - 1; i >= 0; --i) {
    const double gap_tol = std::max(options.separation_tol, 1e-10);
    if (!groups.empty()) {
      const double prev = s_vals(groups.back().back());
      if (prev - s_vals(i) <= gap_tol * prev) {
        groups.back().push_back(i);
        continue;
      }
    }
    groups.push_back({i});
  }

  Matrix chosen(dim, 0);
  std::vector<double> pair_s;
  Matrix u_cols = Matrix::Zero(dim, dim);

  auto remainder = [&](const Vector& x) -> Vector {
    Vector r = x;
    for (int pass = 0; pass < 2; ++pass)
      if (chosen.cols() > 0) r -= chosen * (chosen.transpose() * r);
    return r;
  };

  for (const auto& group : groups) {
    for (;;) {
      double best = 0.0;
      Vector best_vec;
      for (auto idx : group) {
        Vector r = remainder(w.col(idx));
        const double nr = r.norm();
        if (nr > best) {
          best = nr;
          best_vec = std::move(r);
        }
      }
      if (best < 1e-6) break;
      const Vector v = best_vec / best;
      chosen.conservativeResize(Eigen::NoChange, chosen.cols() + 1);
      chosen.col(chosen.cols() - 1) = v;
      Vector u = remainder(s * v);
      const double sv = u.norm();
      if (!(sv > 0.0)) throw DegenerateFormError("williamson: zero symplectic eigenvalue", s);
      u /= sv;
      chosen.conservativeResize(Eigen::NoChange, chosen.cols() + 1);
      chosen.col(chosen.cols() - 1) = u;

      const auto i = static_cast<Eigen::Index>(pair_s.size());
      if (i >= p) throw Error("williamson: too many invariant planes (numerical failure)");
      const double scale = 1.0 / std::sqrt(sv);
      u_cols.col(i) = v * scale;
      u_cols.col(i + p) = u * scale;
      pair_s.push_back(sv);
    }
  }
  if (static_cast<Eigen::Index>(pair_s.size()) != p)
    throw Error("williamson: failed to resolve all invariant planes");

  WilliamsonResult result;
  result.eigenvalues.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) result.eigenvalues(i) = 1.0 / pair_s[i];
  result.basis = l * u_cols;

  // Planes come out in descending s, but rounding inside a cluster can swap
  // neighbours.
  std::vector<Eigen::Index> order(p);
  for (Eigen::Index i = 0; i < p; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
    return result.eigenvalues(x) < result.eigenvalues(y);
  });
  Vector sorted_vals(p);
  Matrix sorted_basis(dim, dim);
  for (Eigen::Index i = 0; i < p; ++i) {
    sorted_vals(i) = result.eigenvalues(order[i]);
    sorted_basis.col(i) = result.basis.col(order[i]);
    sorted_basis.col(i + p) = result.basis.col(order[i] + p);
  }
  result.eigenvalues = sorted_vals;
  result.basis = sorted_basis;

  std::vector<int> current{0};
  for (Eigen::Index i = 1; i <= p; ++i) {
    const bool joins = i < p && result.eigenvalues(i) - result.eigenvalues(i - 1) <=
                                    options.separation_tol * result.eigenvalues(i);
    if (joins) {
      current.push_back(static_cast<int>(i));
      continue;
    }
    if (current.size() > 1) result.clusters.push_back(current);
    current = {static_cast<int>(i)};
  }
  return result;
}

WilliamsonCheck check_williamson(const SymplecticMatrix& omega, const QuadraticForm& form,
                                 const WilliamsonResult& result) {
  const Eigen::Index p = omega.half_dim();
  const Matrix& t = result.basis;
  WilliamsonCheck c;
  c.symplectic_residual = (t.transpose() * omega.matrix() * t - standard_symplectic(p)).cwiseAbs().maxCoeff();
  Vector diag(2 * p);
  diag << result.eigenvalues, result.eigenvalues;
  c.form_residual = (t.transpose() * form.matrix() * t - Matrix(diag.asDiagonal())).cwiseAbs().maxCoeff() /
                    result.eigenvalues.maxCoeff();

  Eigen::EigenSolver<Matrix> es(omega.matrix().partialPivLu().solve(form.matrix()), false);
  std::vector<double> imag;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i).imag() > 0.0) imag.push_back(es.eigenvalues()(i).imag());
  std::sort(imag.begin(), imag.end());
  if (static_cast<Eigen::Index>(imag.size()) != p) {
    c.eigenvalue_error = std::numeric_limits<double>::infinity();
    return c;
  }
  for (Eigen::Index i = 0; i < p; ++i)
    c.eigenvalue_error = std::max(c.eigenvalue_error, std::abs(imag[i] - result.eigenvalues(i)) / imag[i]);
  return c;
}

}  // namespace magflow
