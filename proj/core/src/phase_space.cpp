#include "magflow/phase_space.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "magflow/errors.hpp"
#include "magflow/parallel.hpp"

namespace magflow {

namespace {

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }
Matrix antisymmetrized(const Matrix& m) { return 0.5 * (m - m.transpose()); }

std::string format_point(const Vector& q) {
  std::ostringstream out;
  out << "(";
  for (Eigen::Index i = 0; i < q.size(); ++i) out << (i ? ", " : "") << q(i);
  out << ")";
  return out.str();
}

Matrix central_difference(const MatrixField& f, const Vector& q, Eigen::Index k, double h) {
  Vector plus = q, minus = q;
  plus(k) += h;
  minus(k) -= h;
  return (f(plus) - f(minus)) / (2.0 * h);
}

// Fixed symmetric generators for the compatible-metric family.
Matrix generator(Eigen::Index dim, int which) {
  Matrix k(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (which == 0)
        k(i, j) = 1.0 / static_cast<double>(1 + i + j);
      else
        k(i, j) = i == j ? (i % 2 == 0 ? 1.0 : -1.0) : 0.25;
    }
  return k;
}

}  // namespace

// --- BaseManifold -----------------------------------------------------------

void BaseManifold::validate() const {
  if (periods.empty()) throw InvalidArgument("base manifold has no axes");
  for (double l : periods)
    if (!(l > 0.0)) throw InvalidArgument("base manifold periods must be positive");
  if (cuplength < 0 || crit_lower_bound < 0)
    throw InvalidArgument("topology constants must be nonnegative");
}

Vector BaseManifold::wrap(const Vector& q) const {
  if (!periodic) return q;
  Vector out = q;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double l = periods[i];
    out(i) = std::fmod(out(i), l);
    if (out(i) < 0.0) out(i) += l;
    if (out(i) >= l) out(i) = 0.0;
  }
  return out;
}

Vector BaseManifold::difference(const Vector& a, const Vector& b) const {
  Vector d = a - b;
  if (!periodic) return d;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double l = periods[i];
    d(i) -= l * std::round(d(i) / l);
  }
  return d;
}

// --- MetricField ------------------------------------------------------------

MetricField::MetricField(MatrixField g, MatrixFieldDerivative dg, double h_fd, bool constant)
    : g_(std::move(g)), dg_(std::move(dg)), h_fd_(h_fd), constant_(constant) {
  if (!g_) throw InvalidArgument("metric evaluator is empty");
  if (!(h_fd_ > 0.0)) throw InvalidArgument("metric finite-difference step must be positive");
}

MetricField MetricField::identity(Eigen::Index dim, double scale) {
  if (!(scale > 0.0)) throw InvalidArgument("metric scale must be positive");
  const Matrix g = scale * Matrix::Identity(dim, dim);
  return MetricField([g](const Vector&) { return g; }, {}, 1e-5, true);
}

MetricField MetricField::diagonal(const Vector& values) {
  if (!(values.minCoeff() > 0.0)) throw InvalidArgument("diagonal metric entries must be positive");
  const Matrix g = values.asDiagonal();
  return MetricField([g](const Vector&) { return g; }, {}, 1e-5, true);
}

MetricField MetricField::compatible(const Matrix& omega, double amplitude) {
  const Eigen::Index dim = omega.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> sq(omega.transpose() * omega);
  const Matrix g0 = sq.operatorSqrt();
  const Matrix omega_inv = omega.inverse();
  const Matrix k1 = generator(dim, 0);
  const Matrix k2 = generator(dim, 1);
  auto g = [=](const Vector& q) -> Matrix {
    const double s1 = dim > 0 ? std::sin(q(0)) : 0.0;
    const double c2 = dim > 1 ? std::cos(q(1)) : 0.0;
    const Matrix x = omega_inv * (amplitude * (s1 * k1 + c2 * k2));
    const Matrix id = Matrix::Identity(dim, dim);
    // S^{-1} for the Cayley transform S = (I - X/2)^{-1} (I + X/2).
    const Matrix s_inv = (id + 0.5 * x).partialPivLu().solve(id - 0.5 * x);
    return symmetrized(s_inv.transpose() * g0 * s_inv);
  };
  return MetricField(g, {}, 1e-5, amplitude == 0.0);
}

Matrix MetricField::derivative(const Vector& q, Eigen::Index k) const {
  if (constant_) return Matrix::Zero(q.size(), q.size());
  if (dg_) return dg_(q, k);
  return central_difference(g_, q, k, h_fd_);
}

// --- MagneticForm -----------------------------------------------------------

MagneticForm::MagneticForm(MatrixField omega, bool constant, double closed_tol)
    : omega_(std::move(omega)), constant_(constant), closed_tol_(closed_tol) {
  if (!omega_) throw InvalidArgument("magnetic evaluator is empty");
}

MagneticForm MagneticForm::blocks(const std::vector<double>& coefficients) {
  const auto dim = static_cast<Eigen::Index>(2 * coefficients.size());
  Matrix w = Matrix::Zero(dim, dim);
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    w(2 * k, 2 * k + 1) = coefficients[k];
    w(2 * k + 1, 2 * k) = -coefficients[k];
  }
  return MagneticForm([w](const Vector&) { return w; }, true);
}

MagneticForm MagneticForm::modulated(const std::vector<double>& base, const std::vector<double>& amplitude,
                                     const std::vector<int>& axis) {
  if (base.size() != amplitude.size() || base.size() != axis.size())
    throw InvalidArgument("modulated magnetic form: base/amplitude/axis sizes differ");
  const auto dim = static_cast<Eigen::Index>(2 * base.size());
  for (int a : axis)
    if (a < 0 || a >= dim) throw InvalidArgument("modulated magnetic form: axis out of range");
  return MagneticForm([=](const Vector& q) {
    Matrix w = Matrix::Zero(dim, dim);
    for (std::size_t k = 0; k < base.size(); ++k) {
      const double c = base[k] + amplitude[k] * std::sin(q(axis[k]));
      w(2 * k, 2 * k + 1) = c;
      w(2 * k + 1, 2 * k) = -c;
    }
    return w;
  });
}

// --- TwistedPhaseSpace ------------------------------------------------------

TwistedPhaseSpace::TwistedPhaseSpace(BaseManifold base, MetricField metric, MagneticForm magnetic)
    : base_(std::move(base)), metric_(std::move(metric)), magnetic_(std::move(magnetic)) {
  base_.validate();
  if (base_.dim() % 2 != 0) throw InvalidArgument("base manifold must be even dimensional");
  const Vector origin = Vector::Zero(base_.dim());
  const Matrix g = metric_(origin);
  const Matrix w = magnetic_(origin);
  if (g.rows() != base_.dim() || g.cols() != base_.dim())
    throw InvalidArgument("metric dimension does not match the base manifold");
  if (w.rows() != base_.dim() || w.cols() != base_.dim())
    throw InvalidArgument("magnetic form dimension does not match the base manifold");
  if (metric_.constant()) {
    constant_inverse_ = inverse_metric(origin);
    has_constant_inverse_ = true;
  }
}

Matrix TwistedPhaseSpace::inverse_metric(const Vector& q) const {
  if (has_constant_inverse_) return constant_inverse_;
  const Matrix g = metric_(q);
  Eigen::LLT<Matrix> llt(g);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const Vector d = Matrix(llt.matrixL()).diagonal();
    const double ratio = d.maxCoeff() / d.minCoeff();
    ok = ratio * ratio < max_condition_;
  }
  if (!ok) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrized(g), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    std::ostringstream msg;
    msg << "metric is singular at q = " << format_point(q) << " (condition number " << cond << ")";
    throw SingularMetricError(msg.str(), q, cond);
  }
  return llt.solve(Matrix::Identity(g.rows(), g.cols()));
}

double TwistedPhaseSpace::hamiltonian(const Vector& q, const Vector& p) const {
  return 0.5 * p.dot(inverse_metric(q) * p);
}

Vector TwistedPhaseSpace::hamiltonian_gradient(const Vector& q, const Vector& p) const {
  const Eigen::Index d = base_dim();
  Vector grad(2 * d);
  const Vector v = inverse_metric(q) * p;
  grad.tail(d) = v;
  if (metric_.constant()) {
    grad.head(d).setZero();
  } else {
    // d/dq_k (1/2 p^T g^{-1} p) = -1/2 v^T (dg/dq_k) v with v = g^{-1} p.
    for (Eigen::Index k = 0; k < d; ++k) grad(k) = -0.5 * v.dot(metric_.derivative(q, k) * v);
  }
  return grad;
}

Matrix TwistedPhaseSpace::twisted_form_matrix(const Vector& q) const {
  const Eigen::Index d = base_dim();
  Matrix omega = Matrix::Zero(2 * d, 2 * d);
  omega.topLeftCorner(d, d) = magnetic_(q);
  omega.topRightCorner(d, d) = -Matrix::Identity(d, d);
  omega.bottomLeftCorner(d, d) = Matrix::Identity(d, d);
  return omega;
}

// --- fibre data -------------------------------------------------------------

FibreData fibre_data(const TwistedPhaseSpace& space, const Vector& q) {
  const Eigen::Index d = space.base_dim();
  const Matrix omega = space.twisted_form_matrix(q);
  Matrix zero_section(2 * d, d);
  zero_section.topRows(d) = Matrix::Identity(d, d);
  zero_section.bottomRows(d).setZero();

  Matrix complement;
  try {
    complement = symplectic_complement(omega, zero_section);
  } catch (const DegenerateFormError& e) {
    throw DegenerateFormError("magnetic form is degenerate at q = " + format_point(q), e.gram());
  }
  // Re-coordinatize the complement by horizontal components.
  Eigen::FullPivLU<Matrix> top(complement.topRows(d));
  if (!top.isInvertible())
    throw DegenerateFormError("complement is not a graph over the base at q = " + format_point(q),
                              complement);
  const Matrix frame = complement * top.inverse();

  FibreData out{
      SymplecticMatrix(antisymmetrized(frame.transpose() * omega * frame)),
      QuadraticForm(symmetrized(0.5 * frame.bottomRows(d).transpose() * space.inverse_metric(q) *
                                frame.bottomRows(d))),
      frame,
      frame.bottomRows(d),
  };
  return out;
}

std::vector<SpectrumSample> SpectrumField::samples() const {
  std::vector<SpectrumSample> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out.push_back({points[i], eigenvalues[i]});
  return out;
}

std::vector<Vector> grid_points(const BaseManifold& base, const std::vector<int>& counts) {
  const auto d = static_cast<std::size_t>(base.dim());
  if (counts.size() != d) throw InvalidArgument("grid: one count per base axis required");
  std::size_t total = 1;
  for (int c : counts) {
    if (c < 1) throw InvalidArgument("grid: counts must be positive");
    total *= static_cast<std::size_t>(c);
  }
  std::vector<Vector> out;
  out.reserve(total);
  std::vector<int> idx(d, 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vector q(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) q(i) = base.periods[i] * idx[i] / counts[i];
    out.push_back(std::move(q));
    for (std::size_t i = d; i-- > 0;) {
      if (++idx[i] < counts[i]) break;
      idx[i] = 0;
    }
  }
  return out;
}

SpectrumField eigenvalue_field(const TwistedPhaseSpace& space, const std::vector<Vector>& grid,
                               const ResonanceOptions& options, unsigned jobs) {
  SpectrumField field;
  field.points = grid;
  field.eigenvalues = parallel_map<Vector>(grid.size(), jobs, [&](std::size_t i) {
    const FibreData fd = fibre_data(space, grid[i]);
    return williamson(fd.omega_f, fd.form).eigenvalues;
  });
  field.partition = classify_resonance(field.samples(), options);
  return field;
}

double check_closed(const MagneticForm& magnetic, const std::vector<Vector>& grid, double h_fd) {
  double worst = 0.0;
  auto f = [&](const Vector& q) { return magnetic(q); };
  for (const auto& q : grid) {
    const Eigen::Index d = q.size();
    std::vector<Matrix> partial(d);
    for (Eigen::Index k = 0; k < d; ++k) partial[k] = central_difference(f, q, k, h_fd);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i + 1; j < d; ++j)
        for (Eigen::Index k = j + 1; k < d; ++k) {
          const double cyc = partial[i](j, k) + partial[j](k, i) + partial[k](i, j);
          worst = std::max(worst, std::abs(cyc));
        }
  }
  return worst;
}

}  // namespace magflow
