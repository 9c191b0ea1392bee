// Dense complex-Hermitian linear algebra on top of Eigen.
//
// Every routine here works through the real embedding
//
//     T(A) = [ Re A  -Im A ]
//            [ Im A   Re A ]
//
// so that a single real symmetric eigensolver is the only numeric kernel.
#ifndef CRAN_LINALG_HPP
#define CRAN_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cran {

template <typename Real>
using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;
template <typename Real>
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Real>
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using CMatrixXd = CMatrix<double>;
using CVectorXd = CVector<double>;

/// Dense complex Hermitian matrix. The stored entries satisfy
/// A(i, j) == conj(A(j, i)) exactly: the strictly lower triangle is
/// rebuilt from the symmetrized upper triangle on construction.
template <typename Real>
class HermitianMatrix {
 public:
  using Scalar = std::complex<Real>;

  HermitianMatrix() = default;

  explicit HermitianMatrix(Eigen::Index dim) : m_(CMatrix<Real>::Zero(dim, dim)) {}

  explicit HermitianMatrix(const CMatrix<Real>& m) : m_(m.rows(), m.cols()) {
    if (m.rows() != m.cols()) {
      throw std::invalid_argument("HermitianMatrix: matrix is not square");
    }
    const Eigen::Index n = m.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const Scalar upper = (m(i, j) + std::conj(m(j, i))) / Real(2);
        m_(i, j) = upper;
        m_(j, i) = std::conj(upper);
      }
      m_(j, j) = Scalar(m(j, j).real(), Real(0));
    }
  }

  static HermitianMatrix Zero(Eigen::Index dim) { return HermitianMatrix(dim); }

  static HermitianMatrix Identity(Eigen::Index dim) {
    return HermitianMatrix(CMatrix<Real>::Identity(dim, dim));
  }

  static HermitianMatrix Diagonal(const RVector<Real>& d) {
    return HermitianMatrix(d.template cast<Scalar>().asDiagonal().toDenseMatrix());
  }

  /// v v^H
  static HermitianMatrix Outer(const CVector<Real>& v) {
    return HermitianMatrix(CMatrix<Real>(v * v.adjoint()));
  }

  Eigen::Index dim() const { return m_.rows(); }
  const CMatrix<Real>& matrix() const { return m_; }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

  Real trace() const { return m_.diagonal().real().sum(); }

  bool allFinite() const { return m_.allFinite(); }

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
    return HermitianMatrix(CMatrix<Real>(a.m_ + b.m_));
  }
  friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
    return HermitianMatrix(CMatrix<Real>(a.m_ - b.m_));
  }
  friend HermitianMatrix operator*(Real s, const HermitianMatrix& a) {
    return HermitianMatrix(CMatrix<Real>(s * a.m_));
  }
  HermitianMatrix& operator+=(const HermitianMatrix& o) { return *this = *this + o; }

  friend bool operator==(const HermitianMatrix& a, const HermitianMatrix& b) {
    return a.m_ == b.m_;
  }

 private:
  CMatrix<Real> m_;
};

using HermitianMatrixXd = HermitianMatrix<double>;

/// Re tr(A B) for Hermitian A, B (the trace inner product; real for Hermitian pairs).
template <typename Real>
Real trace_inner(const HermitianMatrix<Real>& a, const HermitianMatrix<Real>& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("trace_inner: dimension mismatch");
  // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
  return (a.matrix().array() * b.matrix().array().conjugate()).real().sum();
}

/// Re(x^H A x)
template <typename Real>
Real quadratic_form(const HermitianMatrix<Real>& a, const CVector<Real>& x) {
  return x.dot(a.matrix() * x).real();
}

template <typename Real>
RMatrix<Real> real_embed(const HermitianMatrix<Real>& a) {
  const Eigen::Index n = a.dim();
  RMatrix<Real> t(2 * n, 2 * n);
  const RMatrix<Real> re = a.matrix().real();
  const RMatrix<Real> im = a.matrix().imag();
  t.topLeftCorner(n, n) = re;
  t.bottomRightCorner(n, n) = re;
  t.topRightCorner(n, n) = -im;
  t.bottomLeftCorner(n, n) = im;
  return t;
}

/// Inverse of real_embed. Averages the redundant copies, so it is also the
/// orthogonal projection of a symmetric 2n x 2n matrix onto the embedding's
/// block structure.
template <typename Real>
HermitianMatrix<Real> from_real_embedding(const RMatrix<Real>& t) {
  if (t.rows() != t.cols() || t.rows() % 2 != 0) {
    throw std::invalid_argument("from_real_embedding: expected a square matrix of even dimension");
  }
  const Eigen::Index n = t.rows() / 2;
  const RMatrix<Real> re = (t.topLeftCorner(n, n) + t.bottomRightCorner(n, n)) / Real(2);
  const RMatrix<Real> im = (t.bottomLeftCorner(n, n) - t.topRightCorner(n, n)) / Real(2);
  CMatrix<Real> m(n, n);
  m.real() = re;
  m.imag() = im;
  return HermitianMatrix<Real>(m);
}

template <typename Real>
struct EigenDecomposition {
  RVector<Real> eigenvalues;    // descending
  CMatrix<Real> eigenvectors;   // unit columns aligned with eigenvalues
};

/// Hermitian eigendecomposition through the real embedding. Each eigenpair of
/// A appears twice in T(A); the duplicates are removed by complex
/// Gram-Schmidt over the candidate vectors a + i b built from the real
/// eigenvectors [a; b], taken in descending eigenvalue order.
template <typename Real>
EigenDecomposition<Real> hermitian_eig(const HermitianMatrix<Real>& a) {
  if (!a.allFinite()) throw std::invalid_argument("hermitian_eig: non-finite entries");
  const Eigen::Index n = a.dim();
  EigenDecomposition<Real> out;
  if (n == 0) return out;

  Eigen::SelfAdjointEigenSolver<RMatrix<Real>> solver(real_embed(a));
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eig: symmetric eigensolver failed");
  }
  const RMatrix<Real>& vecs = solver.eigenvectors();

  // Eigen returns ascending order; walk it backwards.
  std::vector<CVector<Real>> candidates;
  candidates.reserve(2 * n);
  for (Eigen::Index c = 2 * n - 1; c >= 0; --c) {
    CVector<Real> u(n);
    u.real() = vecs.col(c).head(n);
    u.imag() = vecs.col(c).tail(n);
    candidates.push_back(std::move(u));
  }

  std::vector<CVector<Real>> basis;
  std::vector<bool> used(candidates.size(), false);
  auto residual = [&](const CVector<Real>& v) {
    CVector<Real> r = v;
    for (const auto& b : basis) r -= b * b.dot(r);
    return r;
  };
  // A pair (x, Jx) maps to the same complex line, so the second member has
  // zero residual. Within a cluster at least one candidate keeps residual
  // norm^2 >= 2/3, which clears the 0.5 bar.
  for (double bar : {0.5, 1e-6}) {
    for (std::size_t c = 0; c < candidates.size() && static_cast<Eigen::Index>(basis.size()) < n; ++c) {
      if (used[c]) continue;
      // Classical Gram-Schmidt twice.
      const CVector<Real> r = residual(residual(candidates[c]));
      const Real nrm2 = r.squaredNorm();
      if (nrm2 > bar) {
        basis.push_back(r / std::sqrt(nrm2));
        used[c] = true;
      }
    }
  }
  if (static_cast<Eigen::Index>(basis.size()) != n) {
    throw std::runtime_error("hermitian_eig: failed to separate the doubled spectrum");
  }

  std::vector<std::pair<Real, Eigen::Index>> order;
  for (Eigen::Index i = 0; i < n; ++i) {
    order.emplace_back(quadratic_form(a, basis[i]), i);
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& l, const auto& r) { return l.first > r.first; });
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = order[i].first;
    out.eigenvectors.col(i) = basis[order[i].second];
  }
  return out;
}

/// True iff the smallest eigenvalue is >= -tol * max(1, max|lambda|).
template <typename Real>
bool is_psd(const HermitianMatrix<Real>& a, Real tol) {
  if (tol < 0) throw std::invalid_argument("is_psd: negative tolerance");
  if (a.dim() == 0) return true;
  const auto eig = hermitian_eig(a);
  const Real lmax = eig.eigenvalues.cwiseAbs().maxCoeff();
  return eig.eigenvalues(a.dim() - 1) >= -tol * std::max(Real(1), lmax);
}

/// Rotates v by a global phase so that its first entry with magnitude above
/// 1e-8 * max|v_i| is real and nonnegative.
template <typename Real>
CVector<Real> normalize_phase(CVector<Real> v) {
  if (v.size() == 0) return v;
  const Real vmax = v.cwiseAbs().maxCoeff();
  if (vmax == 0) return v;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const Real mag = std::abs(v(i));
    if (mag > Real(1e-8) * vmax) {
      v *= std::conj(v(i)) / mag;
      v(i) = std::complex<Real>(mag, 0);
      break;
    }
  }
  return v;
}

template <typename Real>
struct PrincipalComponent {
  Real lambda1;
  CVector<Real> u1;

  /// sqrt(lambda1) * u1, the rank-one factor.
  CVector<Real> beam() const { return std::sqrt(std::max(lambda1, Real(0))) * u1; }
};

template <typename Real>
PrincipalComponent<Real> principal_component(const HermitianMatrix<Real>& a, Real psd_tol = Real(1e-8)) {
  if (a.dim() == 0) throw std::invalid_argument("principal_component: empty matrix");
  const auto eig = hermitian_eig(a);
  const Real lmax = eig.eigenvalues.cwiseAbs().maxCoeff();
  if (eig.eigenvalues(a.dim() - 1) < -psd_tol * std::max(Real(1), lmax)) {
    throw std::invalid_argument("principal_component: matrix is not positive semidefinite");
  }
  return {eig.eigenvalues(0), normalize_phase<Real>(eig.eigenvectors.col(0))};
}

/// Number of eigenvalues strictly above rel_tol * lambda_max (0 for the zero matrix).
template <typename Real>
int numerical_rank(const HermitianMatrix<Real>& a, Real rel_tol) {
  if (!(rel_tol > 0 && rel_tol < 1)) throw std::invalid_argument("numerical_rank: rel_tol must be in (0, 1)");
  if (a.dim() == 0) return 0;
  const auto eig = hermitian_eig(a);
  const Real lmax = eig.eigenvalues(0);
  if (lmax <= 0) return 0;
  return static_cast<int>((eig.eigenvalues.array() > rel_tol * lmax).count());
}

}  // namespace cran

#endif  // CRAN_LINALG_HPP
