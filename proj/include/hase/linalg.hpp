#pragma once

// Dense symmetric-matrix kernels shared by the grid, the sensors and the
// planners. Everything here is templated on the Eigen expression type so the
// same code runs on fixed-size and dynamic matrices of any scalar.

#include "hase/error.hpp"
#include "hase/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace hase {

template <typename Derived>
typename Derived::Scalar max_abs(const Eigen::MatrixBase<Derived>& m) {
  return m.size() == 0 ? typename Derived::Scalar(0) : m.cwiseAbs().maxCoeff();
}

/// True when `m` is square and |m - m^T| <= rel_tol * max|m| elementwise.
template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& m,
                  typename Derived::Scalar rel_tol = typename Derived::Scalar(1e-9)) {
  if (m.rows() != m.cols()) return false;
  const auto scale = std::max(max_abs(m), typename Derived::Scalar(1e-300));
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

template <typename Derived>
MatrixX<typename Derived::Scalar> symmetrize(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.transpose()) / typename Derived::Scalar(2);
}

/// Eigen-decomposition of a symmetric matrix. Eigenvalues ascend; every
/// eigenvector is sign-normalised so its first non-negligible component is
/// positive, which makes the result a function of the matrix alone.
template <typename Scalar>
struct SymmetricEigen {
  VectorX<Scalar> values;
  MatrixX<Scalar> vectors;

  Scalar max_value() const { return values(values.size() - 1); }
  Scalar min_value() const { return values(0); }
  VectorX<Scalar> principal() const { return vectors.col(vectors.cols() - 1); }
};

template <typename Derived>
SymmetricEigen<typename Derived::Scalar> symmetric_eigen(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(symmetrize(m));
  if (solver.info() != Eigen::Success) throw DomainError("symmetric eigensolver failed");
  SymmetricEigen<Scalar> out{solver.eigenvalues(), solver.eigenvectors()};
  for (Eigen::Index c = 0; c < out.vectors.cols(); ++c) {
    auto col = out.vectors.col(c);
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      if (std::abs(col(r)) > Scalar(1e-12)) {
        if (col(r) < Scalar(0)) col = -col;
        break;
      }
    }
  }
  return out;
}

/// Throws DomainError unless `m` is symmetric positive semi-definite
/// (eigenvalues >= -rel_tol * max|m|).
template <typename Derived>
void require_psd(const Eigen::MatrixBase<Derived>& m, const char* what,
                 typename Derived::Scalar rel_tol = typename Derived::Scalar(1e-10)) {
  if (!is_symmetric(m)) throw DomainError(std::string(what) + ": matrix is not symmetric");
  if (m.size() == 0) return;
  const auto eig = symmetric_eigen(m);
  if (eig.min_value() < -rel_tol * max_abs(m))
    throw DomainError(std::string(what) + ": matrix is indefinite");
}

template <typename Derived>
bool is_spd(const Eigen::MatrixBase<Derived>& m) {
  if (!is_symmetric(m)) return false;
  Eigen::LLT<MatrixX<typename Derived::Scalar>> llt(symmetrize(m));
  return llt.info() == Eigen::Success;
}

/// Inverse of an SPD matrix via Cholesky; throws DomainError when singular.
template <typename Derived>
MatrixX<typename Derived::Scalar> spd_inverse(const Eigen::MatrixBase<Derived>& m, const char* what) {
  using Scalar = typename Derived::Scalar;
  if (!is_symmetric(m)) throw DomainError(std::string(what) + ": matrix is not symmetric");
  Eigen::LLT<MatrixX<Scalar>> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) throw DomainError(std::string(what) + ": matrix is not positive definite");
  return symmetrize(llt.solve(MatrixX<Scalar>::Identity(m.rows(), m.cols())));
}

/// Kalman covariance update for a stationary state observed directly:
/// (prior^-1 + q^-1)^-1, computed in information form.
template <typename DerivedA, typename DerivedB>
MatrixX<typename DerivedA::Scalar> fuse(const Eigen::MatrixBase<DerivedA>& prior,
                                        const Eigen::MatrixBase<DerivedB>& q) {
  if (prior.rows() != q.rows() || prior.cols() != q.cols())
    throw DomainError("fuse: dimension mismatch");
  const MatrixX<typename DerivedA::Scalar> info = spd_inverse(prior, "fuse prior") + spd_inverse(q, "fuse observation");
  return spd_inverse(info, "fuse information");
}

/// Symmetric square root of a PSD matrix (negative round-off eigenvalues clamp to 0).
template <typename Derived>
MatrixX<typename Derived::Scalar> psd_sqrt(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  const auto eig = symmetric_eigen(m);
  const VectorX<Scalar> root = eig.values.cwiseMax(Scalar(0)).cwiseSqrt();
  return eig.vectors * root.asDiagonal() * eig.vectors.transpose();
}

}  // namespace hase
