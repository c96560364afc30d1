#ifndef SWIPT_MATKERNEL_HPP
#define SWIPT_MATKERNEL_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace swipt {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Raised when a caller breaks a documented precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotPsdError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A reduced constraint matrix is too ill-conditioned to invert safely.
class RankToleranceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultRankTol = 1e-8;

inline double inf_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double hermitian_residual(const CMatrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  return inf_norm(m - m.adjoint());
}

inline bool is_hermitian(const CMatrix& m, double tol = 1e-12) {
  return m.rows() == m.cols() && hermitian_residual(m) <= tol * (1.0 + inf_norm(m));
}

inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

inline CMatrix outer(const CVector& v) { return v * v.adjoint(); }

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
struct EigenPairs {
  RVector values;
  CMatrix vectors;  // column k pairs with values(k)
};

inline EigenPairs hermitian_eig(const CMatrix& m) {
  if (!is_hermitian(m)) {
    throw ContractError("hermitian_eig: input is not Hermitian within tolerance");
  }
  const auto n = m.rows();
  EigenPairs out;
  if (n == 0) return out;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(m));
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("hermitian_eig: eigensolver failed to converge");
  }
  // Eigen returns ascending order; flip.
  out.values = es.eigenvalues().reverse();
  out.vectors = es.eigenvectors().rowwise().reverse();
  // Fix the phase of each eigenvector so the largest-magnitude entry is real positive.
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index idx = 0;
    out.vectors.col(k).cwiseAbs().maxCoeff(&idx);
    const cplx pivot = out.vectors(idx, k);
    if (std::abs(pivot) > 0) out.vectors.col(k) *= std::conj(pivot) / std::abs(pivot);
  }
  return out;
}

inline double spectral_norm_hermitian(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(m), Eigen::EigenvaluesOnly).eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

inline double min_eigenvalue(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(m), Eigen::EigenvaluesOnly).eigenvalues()(0);
}

inline double max_eigenvalue(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(m), Eigen::EigenvaluesOnly).eigenvalues();
  return ev(ev.size() - 1);
}

/// Orthonormal range/null bases of a PSD matrix A = U1 diag(values) U1^H.
struct RangeNullSplit {
  Eigen::Index rank = 0;
  CMatrix range_basis;  // N x rank
  CMatrix null_basis;   // N x (N - rank)
  RVector eigenvalues;  // the nonzero eigenvalues, descending
};

inline RangeNullSplit range_null_split(const CMatrix& a, double rel_tol = kDefaultRankTol) {
  const auto n = a.rows();
  const EigenPairs ep = hermitian_eig(a);
  RangeNullSplit out;
  if (n == 0) return out;
  const double top = std::max(std::abs(ep.values(0)), std::abs(ep.values(n - 1)));
  if (ep.values(n - 1) < -rel_tol * top) {
    throw NotPsdError("range_null_split: matrix has a significantly negative eigenvalue");
  }
  const double cut = rel_tol * std::max(ep.values(0), 0.0);
  Eigen::Index m = 0;
  while (m < n && ep.values(m) > cut && ep.values(m) > 0.0) ++m;
  out.rank = m;
  out.range_basis = ep.vectors.leftCols(m);
  out.null_basis = ep.vectors.rightCols(n - m);
  out.eigenvalues = ep.values.head(m);
  return out;
}

/// True iff the smallest eigenvalue is >= -tol * (1 + ||M||_2).
inline bool is_psd(const CMatrix& m, double tol = 1e-9) {
  if (m.size() == 0) return true;
  const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(hermitian_part(m), Eigen::EigenvaluesOnly).eigenvalues();
  const double norm = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  return ev(0) >= -tol * (1.0 + norm);
}

/// [[Re M, -Im M], [Im M, Re M]]; M is PSD iff the embedding is.
inline RMatrix complex_to_real_embedding(const CMatrix& m) {
  const auto n = m.rows();
  RMatrix out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = m.real();
  out.topRightCorner(n, n) = -m.imag();
  out.bottomLeftCorner(n, n) = m.imag();
  out.bottomRightCorner(n, n) = m.real();
  return out;
}

/// Inverse of the embedding, averaging the redundant blocks of a real symmetric 2N x 2N matrix.
inline CMatrix real_to_complex_projection(const RMatrix& y) {
  const auto n = y.rows() / 2;
  const RMatrix re = 0.5 * (y.topLeftCorner(n, n) + y.bottomRightCorner(n, n));
  const RMatrix im = 0.5 * (y.bottomLeftCorner(n, n) - y.topRightCorner(n, n));
  CMatrix out(n, n);
  out.real() = re;
  out.imag() = im;
  return hermitian_part(out);
}

/// Orthonormal basis for the column space of M (rank decided relative to the largest singular value).
inline CMatrix orthonormal_columns(const CMatrix& m, double rel_tol = 1e-10) {
  if (m.cols() == 0 || m.rows() == 0) return CMatrix(m.rows(), 0);
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeThinU);
  const RVector& s = svd.singularValues();
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > rel_tol * std::max(s(0), 1e-300)) ++r;
  return svd.matrixU().leftCols(r);
}

/// Orthonormal basis of the orthogonal complement of span(Q) for Q with orthonormal columns.
inline CMatrix orthogonal_complement(const CMatrix& q, Eigen::Index n) {
  if (q.cols() == 0) return CMatrix::Identity(n, n);
  const CMatrix proj = CMatrix::Identity(n, n) - q * q.adjoint();
  const EigenPairs ep = hermitian_eig(hermitian_part(proj));
  const Eigen::Index k = n - q.cols();
  return ep.vectors.leftCols(k);
}

/// Moore-Penrose pseudo-inverse of a Hermitian PSD matrix.
inline CMatrix psd_pinv(const CMatrix& m, double rel_tol = 1e-10) {
  const auto n = m.rows();
  if (n == 0) return m;
  const EigenPairs ep = hermitian_eig(hermitian_part(m));
  const double cut = rel_tol * std::max(std::abs(ep.values(0)), 1e-300);
  CMatrix out = CMatrix::Zero(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (ep.values(k) > cut) out += (1.0 / ep.values(k)) * outer(ep.vectors.col(k));
  }
  return out;
}

inline double trace_real(const CMatrix& m) { return m.trace().real(); }

/// Re Tr(A B) for Hermitian A, B without forming the product.
inline double trace_product(const CMatrix& a, const CMatrix& b) {
  return (a.array() * b.transpose().array()).sum().real();
}

inline double quad_form(const CMatrix& m, const CVector& v) { return (v.adjoint() * m * v)(0, 0).real(); }

}  // namespace swipt

#endif  // SWIPT_MATKERNEL_HPP
