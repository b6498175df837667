#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "lpr/error.hpp"
#include "lpr/numerics/dual.hpp"

namespace lpr {

template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Three-index array stored as slices: t[i](j, k).
using Tensor3 = std::vector<DenseMatrix>;

inline Tensor3 zero_tensor(int n0, int n1, int n2) {
  return Tensor3(static_cast<std::size_t>(n0), DenseMatrix::Zero(n1, n2));
}

template <class T, class Derived>
Mat<T> cast_to(const Eigen::MatrixBase<Derived>& m) {
  Mat<T> out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = T(m(i, j));
  return out;
}

template <class T, class Derived>
Vec<T> cast_vec(const Eigen::MatrixBase<Derived>& v) {
  Vec<T> out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = T(v(i));
  return out;
}

template <class T>
DenseMatrix values_of(const Mat<T>& m) {
  DenseMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = value_of(m(i, j));
  return out;
}

template <class T>
VectorXd values_of(const Vec<T>& v) {
  VectorXd out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out(i) = value_of(v(i));
  return out;
}

template <class Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!isfinite(m(i, j))) return false;
  return true;
}

/// Solve A X = B by Gaussian elimination with partial pivoting. Generic over
/// the scalar so derivatives propagate through inverses; pivoting decisions use
/// the innermost value only. Throws SingularMatrix when a pivot falls below
/// 1e-14 times the largest entry of A.
template <class T>
Mat<T> solve_linear(Mat<T> A, Mat<T> B) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n)
    fail(ErrorCode::SingularMatrix, "solve_linear: dimension mismatch (" + std::to_string(A.rows()) +
                                        "x" + std::to_string(A.cols()) + " vs " +
                                        std::to_string(B.rows()) + " rows)");
  double scale = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) scale = std::max(scale, std::abs(value_of(A(i, j))));
  const double threshold = 1e-14 * scale;
  if (scale == 0.0 && n > 0) fail(ErrorCode::SingularMatrix, "solve_linear: zero matrix");

  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    double best = std::abs(value_of(A(k, k)));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double cand = std::abs(value_of(A(i, k)));
      if (cand > best) {
        best = cand;
        piv = i;
      }
    }
    if (!(best > threshold))
      fail(ErrorCode::SingularMatrix,
           "solve_linear: pivot " + std::to_string(best) + " below threshold at column " +
               std::to_string(k));
    if (piv != k) {
      A.row(k).swap(A.row(piv));
      B.row(k).swap(B.row(piv));
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const T f = A(i, k) / A(k, k);
      if (value_of(f) == 0.0 && !is_dual<T>::value) continue;
      for (Eigen::Index j = k; j < n; ++j) A(i, j) -= f * A(k, j);
      for (Eigen::Index j = 0; j < B.cols(); ++j) B(i, j) -= f * B(k, j);
    }
  }
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    for (Eigen::Index j = 0; j < B.cols(); ++j) {
      T acc = B(k, j);
      for (Eigen::Index i = k + 1; i < n; ++i) acc -= A(k, i) * B(i, j);
      B(k, j) = acc / A(k, k);
    }
  }
  return B;
}

template <class T>
Vec<T> solve_linear(const Mat<T>& A, const Vec<T>& b) {
  Mat<T> B = b;
  return solve_linear<T>(A, std::move(B)).col(0);
}

inline VectorXd solve_linear(const DenseMatrix& A, const VectorXd& b) {
  return solve_linear<double>(A, b);
}

template <class T>
Mat<T> inverse(const Mat<T>& A) {
  return solve_linear<T>(A, Mat<T>(Mat<T>::Identity(A.rows(), A.rows())));
}

}  // namespace lpr
