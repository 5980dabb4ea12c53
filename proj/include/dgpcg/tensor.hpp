#pragma once

// Dense vector/matrix types and the positive-definite factorization used by
// every Gaussian-process computation in the library.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <sstream>

#include "dgpcg/errors.hpp"

namespace dgpcg {

template <typename Scalar>
using VecT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Vec = VecT<double>;
using Mat = MatT<double>;

/// Lower Cholesky factor of `A + jitter_used * I`.
template <typename Scalar>
struct CholFactor {
  MatT<Scalar> lower;
  Scalar jitter_used{0};

  Eigen::Index size() const { return lower.rows(); }

  /// L * L^T, i.e. the matrix that was actually factorized.
  MatT<Scalar> reconstruct() const { return lower * lower.transpose(); }
};

/// Diagonal jitter tried, in order, when a plain factorization fails.
inline constexpr std::array<double, 3> kJitterLadder{1e-8, 1e-6, 1e-4};

namespace detail {

template <typename Derived>
void require_square_symmetric(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols() || a.rows() == 0) {
    std::ostringstream msg;
    msg << "cholesky expects a non-empty square matrix, got " << a.rows() << "x" << a.cols();
    throw Error(Errc::DimensionMismatch, msg.str());
  }
  if (!a.allFinite()) throw Error(Errc::NotPositiveDefinite, "matrix has non-finite entries");
  const Scalar scale = std::max<Scalar>(Scalar(1), a.cwiseAbs().maxCoeff());
  const Scalar asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > Scalar(1e-9) * scale) {
    std::ostringstream msg;
    msg << "max |A - A^T| = " << asym;
    throw Error(Errc::NotSymmetric, msg.str());
  }
}

template <typename Scalar>
bool try_llt(const MatT<Scalar>& a, CholFactor<Scalar>& out) {
  Eigen::LLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>, Eigen::Lower> llt(a);
  if (llt.info() != Eigen::Success) return false;
  MatT<Scalar> lower = llt.matrixL();
  if (!lower.allFinite() || (lower.diagonal().array() <= Scalar(0)).any()) return false;
  out.lower = std::move(lower);
  return true;
}

}  // namespace detail

/// Factorizes a symmetric positive-definite matrix. Falls back to the jitter
/// ladder when the plain factorization fails; the jitter that succeeded is
/// recorded in the result.
template <typename Derived>
CholFactor<typename Derived::Scalar> cholesky(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  detail::require_square_symmetric(a);

  // Only the lower triangle is read, so symmetrize to keep the factor
  // independent of which side carries rounding noise.
  MatT<Scalar> sym = (a + a.transpose()) / Scalar(2);
  CholFactor<Scalar> f;
  if (detail::try_llt(sym, f)) return f;
  for (double jitter : kJitterLadder) {
    MatT<Scalar> shifted = sym;
    shifted.diagonal().array() += Scalar(jitter);
    if (detail::try_llt(shifted, f)) {
      f.jitter_used = Scalar(jitter);
      return f;
    }
  }
  throw Error(Errc::NotPositiveDefinite, "factorization failed after maximum jitter 1e-4");
}

/// Solves (A + jitter I) x = b given the factor of A. `b` may be a vector or a
/// matrix with one right-hand side per column.
template <typename Scalar, typename Derived>
typename Derived::PlainObject solve_posdef(const CholFactor<Scalar>& f,
                                           const Eigen::MatrixBase<Derived>& b) {
  if (b.rows() != f.size()) {
    std::ostringstream msg;
    msg << "factor is " << f.size() << "x" << f.size() << ", rhs has " << b.rows() << " rows";
    throw Error(Errc::DimensionMismatch, msg.str());
  }
  typename Derived::PlainObject x = b;
  f.lower.template triangularView<Eigen::Lower>().solveInPlace(x);
  f.lower.transpose().template triangularView<Eigen::Upper>().solveInPlace(x);
  return x;
}

/// log det(A + jitter I) from its factor.
template <typename Scalar>
Scalar logdet(const CholFactor<Scalar>& f) {
  return Scalar(2) * f.lower.diagonal().array().log().sum();
}

}  // namespace dgpcg
