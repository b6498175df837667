#pragma once

#include <cmath>
#include <exception>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "lpr/error.hpp"
#include "lpr/numerics/dual.hpp"
#include "lpr/numerics/linalg.hpp"

namespace lpr {

/// How partial derivatives of user functions are evaluated.
struct DiffScheme {
  enum class Kind { DualNumber, Central };
  Kind kind = Kind::DualNumber;
  double step = 1e-6;  ///< central differences only; scaled by max(1, |x_j|)

  static DiffScheme dual() { return {}; }
  static DiffScheme central(double h = 1e-6) {
    if (!(h > 0.0)) fail(ErrorCode::OutOfRange, "central difference step must be positive");
    return {Kind::Central, h};
  }
  bool is_dual() const { return kind == Kind::DualNumber; }
};

// Signatures of the model callbacks, one per scalar type.
template <class T>
using ScalarFnSig = T(const Vec<T>&);
template <class T>
using VecFnSig = Vec<T>(const Vec<T>&);
template <class T>
using MatFnSig = Mat<T>(const Vec<T>&);
template <class T>
using ActionFnSig = Vec<T>(const Vec<T>&, const Vec<T>&);

/// A user function instantiated at double, Dual1 and Dual2. The dual slots may
/// be empty for opaque models, in which case differentiation falls back to
/// central differences.
template <template <class> class Sig>
struct Family {
  std::function<Sig<double>> f0;
  std::function<Sig<Dual1>> f1;
  std::function<Sig<Dual2>> f2;

  /// Instantiate a generic callable at all three scalar types.
  template <class F>
  static Family from(F f) {
    Family out;
    out.f0 = f;
    out.f1 = f;
    out.f2 = f;
    return out;
  }
  /// Wrap a double-only function; derivatives will use central differences.
  static Family opaque(std::function<Sig<double>> f) {
    Family out;
    out.f0 = std::move(f);
    return out;
  }

  template <class T>
  const std::function<Sig<T>>& at() const {
    if constexpr (std::is_same_v<T, double>) return f0;
    else if constexpr (std::is_same_v<T, Dual1>) return f1;
    else return f2;
  }
  template <class T>
  bool has() const {
    return static_cast<bool>(at<T>());
  }

  template <class... Args>
  auto operator()(Args&&... args) const {
    return f0(std::forward<Args>(args)...);
  }
};

using ScalarFamily = Family<ScalarFnSig>;
using VecFamily = Family<VecFnSig>;
using MatFamily = Family<MatFnSig>;
using ActionFamily = Family<ActionFnSig>;

namespace detail {

template <class F, class... Args>
auto guarded_call(const F& f, Args&&... args) {
  try {
    return f(std::forward<Args>(args)...);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorCode::EvaluationFailure, std::string("function faulted at probe point: ") + e.what());
  }
}

inline double probe_step(double h, double x) { return h * std::max(1.0, std::abs(x)); }

}  // namespace detail

/// Seed a dual vector with unit derivative in direction j.
inline Vec<Dual1> seed(const VectorXd& x, Eigen::Index j) {
  Vec<Dual1> xd(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) xd(i) = Dual1(x(i), i == j ? 1.0 : 0.0);
  return xd;
}

/// Derivative slices d[j] = dM/dx_j of a matrix-valued callable taking Vec<Dual1>.
template <class F>
std::vector<DenseMatrix> matrix_derivatives_dual(const F& f, const VectorXd& x) {
  std::vector<DenseMatrix> out;
  out.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const Mat<Dual1> m = detail::guarded_call(f, seed(x, j));
    DenseMatrix dj(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) dj(r, c) = m(r, c).d;
    if (!all_finite(dj))
      fail(ErrorCode::EvaluationFailure, "non-finite derivative in direction " + std::to_string(j));
    out.push_back(std::move(dj));
  }
  return out;
}

/// Same slices by central differences with step h * max(1, |x_j|).
template <class F>
std::vector<DenseMatrix> matrix_derivatives_central(const F& f, const VectorXd& x, double h) {
  std::vector<DenseMatrix> out;
  out.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double hj = detail::probe_step(h, x(j));
    VectorXd xp = x, xm = x;
    xp(j) += hj;
    xm(j) -= hj;
    const DenseMatrix mp = detail::guarded_call(f, xp);
    const DenseMatrix mm = detail::guarded_call(f, xm);
    DenseMatrix dj = (mp - mm) / (2.0 * hj);
    if (!all_finite(dj))
      fail(ErrorCode::EvaluationFailure, "non-finite derivative in direction " + std::to_string(j));
    out.push_back(std::move(dj));
  }
  return out;
}

/// Dispatch on the scheme for a generic callable usable at both scalar types.
template <class F>
std::vector<DenseMatrix> matrix_derivatives(const F& f, const VectorXd& x, const DiffScheme& scheme) {
  if (scheme.is_dual()) return matrix_derivatives_dual(f, x);
  return matrix_derivatives_central(f, x, scheme.step);
}

namespace detail {
inline DenseMatrix stack_columns(const std::vector<DenseMatrix>& slices, Eigen::Index n) {
  const Eigen::Index m = slices.empty() ? 0 : slices.front().rows();
  DenseMatrix J(m, n);
  for (Eigen::Index j = 0; j < n; ++j) J.col(j) = slices[static_cast<std::size_t>(j)].col(0);
  return J;
}
}  // namespace detail

template <class F>
DenseMatrix jacobian_dual(const F& f, const VectorXd& x) {
  return detail::stack_columns(
      matrix_derivatives_dual([&](const Vec<Dual1>& y) -> Mat<Dual1> { return f(y); }, x), x.size());
}

template <class F>
DenseMatrix jacobian_central(const F& f, const VectorXd& x, double h) {
  return detail::stack_columns(
      matrix_derivatives_central([&](const VectorXd& y) -> DenseMatrix { return f(y); }, x, h),
      x.size());
}

/// Jacobian J(i, j) = df_i/dx_j of a generic callable usable at both scalar types.
template <class F>
DenseMatrix jacobian_of(const F& f, const VectorXd& x, const DiffScheme& scheme) {
  if (scheme.is_dual()) return jacobian_dual(f, x);
  return jacobian_central(f, x, scheme.step);
}

/// Jacobian of a model vector function. Dual mode requires the Dual1 slot;
/// otherwise central differences are used.
inline DenseMatrix jacobian(const VecFamily& f, const VectorXd& x, const DiffScheme& scheme) {
  if (scheme.is_dual() && f.has<Dual1>()) return jacobian_dual(f.f1, x);
  return jacobian_central(f.f0, x, scheme.is_dual() ? 1e-6 : scheme.step);
}

/// Jacobian of an arbitrary double-only function by central differences.
inline DenseMatrix jacobian(const std::function<VectorXd(const VectorXd&)>& f, const VectorXd& x,
                            const DiffScheme& scheme) {
  return jacobian_central(f, x, scheme.is_dual() ? 1e-6 : scheme.step);
}

inline std::vector<DenseMatrix> matrix_derivatives(const MatFamily& f, const VectorXd& x,
                                                   const DiffScheme& scheme) {
  if (scheme.is_dual() && f.has<Dual1>()) return matrix_derivatives_dual(f.f1, x);
  return matrix_derivatives_central(f.f0, x, scheme.is_dual() ? 1e-6 : scheme.step);
}

inline VectorXd gradient(const ScalarFamily& f, const VectorXd& x, const DiffScheme& scheme) {
  VectorXd g(x.size());
  const bool dual = scheme.is_dual() && f.has<Dual1>();
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (dual) {
      g(j) = detail::guarded_call(f.f1, seed(x, j)).d;
    } else {
      const double h = detail::probe_step(scheme.is_dual() ? 1e-6 : scheme.step, x(j));
      VectorXd xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      g(j) = (detail::guarded_call(f.f0, xp) - detail::guarded_call(f.f0, xm)) / (2.0 * h);
    }
  }
  if (!all_finite(g)) fail(ErrorCode::EvaluationFailure, "non-finite gradient");
  return g;
}

/// Second derivatives h[i](j, k) = d2 f_i / dx_j dx_k.
inline Tensor3 hessian(const VecFamily& f, const VectorXd& x, const DiffScheme& scheme) {
  const Eigen::Index n = x.size();
  if (scheme.is_dual() && f.has<Dual2>()) {
    Tensor3 out;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index k = j; k < n; ++k) {
        Vec<Dual2> xd(n);
        for (Eigen::Index i = 0; i < n; ++i)
          xd(i) = Dual2(Dual1(x(i), i == k ? 1.0 : 0.0), Dual1(i == j ? 1.0 : 0.0, 0.0));
        const Vec<Dual2> y = detail::guarded_call(f.f2, xd);
        if (out.empty()) out = zero_tensor(static_cast<int>(y.size()), static_cast<int>(n), static_cast<int>(n));
        for (Eigen::Index i = 0; i < y.size(); ++i) {
          out[static_cast<std::size_t>(i)](j, k) = y(i).d.d;
          out[static_cast<std::size_t>(i)](k, j) = y(i).d.d;
        }
      }
    }
    return out;
  }
  // Nested central differences need a larger step to keep roundoff below truncation.
  const double h = std::max(scheme.is_dual() ? 1e-6 : scheme.step, 1e-4);
  Tensor3 out;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double hj = detail::probe_step(h, x(j));
    VectorXd xp = x, xm = x;
    xp(j) += hj;
    xm(j) -= hj;
    const DenseMatrix dJ = (jacobian_central(f.f0, xp, h) - jacobian_central(f.f0, xm, h)) / (2.0 * hj);
    if (out.empty()) out = zero_tensor(static_cast<int>(dJ.rows()), static_cast<int>(n), static_cast<int>(n));
    for (Eigen::Index i = 0; i < dJ.rows(); ++i)
      for (Eigen::Index k = 0; k < n; ++k) out[static_cast<std::size_t>(i)](j, k) = dJ(i, k);
  }
  for (auto& slice : out) slice = 0.5 * (slice + slice.transpose()).eval();
  return out;
}

}  // namespace lpr
