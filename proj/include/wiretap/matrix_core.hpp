#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace wiretap {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : NumericError {
  using NumericError::NumericError;
};

// Kernel-level tolerance knobs. PSD slack is relative to 1 + |A|_F.
struct KernelTolerances {
  double psd_tol = 1e-9;
  double reconstruct_tol = 1e-10;
};

template <class Derived>
typename Derived::PlainObject symmetrize(const Eigen::MatrixBase<Derived>& a) {
  return ((a + a.transpose()) / 2).eval();
}

template <typename Scalar>
struct EigDecompT {
  // Eigenvalues in descending order; vecs columns are the matching unit eigenvectors.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vals;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vecs;
};
using EigDecomp = EigDecompT<double>;

template <class Derived>
EigDecompT<typename Derived::Scalar> eig_sym(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() != a.cols()) throw std::invalid_argument("eig_sym: matrix must be square");
  Matrix s = symmetrize(a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.info() != Eigen::Success)
    throw NumericError("eig_sym: eigensolver did not converge (dim " + std::to_string(a.rows()) + ")");
  EigDecompT<Scalar> out;
  out.vals = es.eigenvalues().reverse();
  out.vecs = es.eigenvectors().rowwise().reverse();
  return out;
}

// log det of a symmetric positive definite matrix, via Cholesky.
template <class Derived>
typename Derived::Scalar logdet_psd(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (a.rows() != a.cols()) throw std::invalid_argument("logdet_psd: matrix must be square");
  Matrix s = symmetrize(a);
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("logdet_psd: matrix is not positive definite");
  Scalar acc = 0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) acc += std::log(llt.matrixL()(i, i));
  return 2 * acc;
}

template <class Derived>
typename Derived::Scalar min_eig(const Eigen::MatrixBase<Derived>& a) {
  return eig_sym(a).vals.minCoeff();
}

// Nearest PSD matrix in Frobenius norm: negative eigenvalues clipped to zero.
template <class Derived>
typename Derived::PlainObject psd_project(const Eigen::MatrixBase<Derived>& a) {
  auto ed = eig_sym(a);
  auto clipped = ed.vals.cwiseMax(typename Derived::Scalar(0));
  return symmetrize(ed.vecs * clipped.asDiagonal() * ed.vecs.transpose());
}

// Loewner order test: a <= b up to slack tol on the smallest eigenvalue of b - a.
template <class DerivedA, class DerivedB>
bool psd_leq(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
             double tol = KernelTolerances{}.psd_tol) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("psd_leq: dimension mismatch");
  return min_eig((b - a).eval()) >= -tol;
}

template <class Derived>
bool is_psd(const Eigen::MatrixBase<Derived>& a, double tol = KernelTolerances{}.psd_tol) {
  return min_eig(symmetrize(a)) >= -tol;
}

inline bool mat_close(const Mat& a, const Mat& b, double tol) {
  // |a - b|_F <= tol * (1 + |b|_F)
  return (a - b).norm() <= tol * (1 + b.norm());
}

}  // namespace wiretap
