#pragma once

// Charts for the compact symmetry group: circle, n-torus and SU(2) in
// exponential coordinates. SU(2) elements are unit quaternions; the adjoint
// representation is the SO(3) rotation they induce, so the structure constants
// are the Levi-Civita symbol.
//
// Frame conventions (checked against finite differences of the group law):
//   v(a)    = d(a.b)/db   at b = e   columns are the left-invariant fields L_alpha
//   vbar(a) = d(b.a)/db   at b = e   columns are the right-invariant fields
//   u = v^-1, ubar = vbar^-1, rho = ubar v (adjoint), rhobar = rho^-1.

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "lpr/error.hpp"
#include "lpr/numerics/diff.hpp"
#include "lpr/numerics/linalg.hpp"

namespace lpr {

enum class GroupKind { Circle, Torus, Su2 };

struct GroupPoint {
  VectorXd a;
};

struct GroupChart {
  GroupKind kind = GroupKind::Circle;
  int dim = 1;
  Tensor3 structure;          ///< structure[gamma](alpha, beta) = c^gamma_{alpha beta}
  double chart_radius = 0.0;  ///< su2 only

  static GroupChart circle() { return torus(1); }

  static GroupChart torus(int n) {
    if (n < 1) fail(ErrorCode::OutOfRange, "torus dimension must be positive");
    GroupChart g;
    g.kind = n == 1 ? GroupKind::Circle : GroupKind::Torus;
    g.dim = n;
    g.structure = zero_tensor(n, n, n);
    return g;
  }

  static GroupChart su2() {
    GroupChart g;
    g.kind = GroupKind::Su2;
    g.dim = 3;
    g.structure = zero_tensor(3, 3, 3);
    for (int i = 0; i < 3; ++i) {
      const int j = (i + 1) % 3, k = (i + 2) % 3;
      g.structure[k](i, j) = 1.0;
      g.structure[k](j, i) = -1.0;
    }
    g.chart_radius = std::numbers::pi * (1.0 - 1e-6);
    return g;
  }

  bool abelian() const { return kind != GroupKind::Su2; }

  std::string name() const {
    switch (kind) {
      case GroupKind::Circle: return "circle";
      case GroupKind::Torus: return "torus(" + std::to_string(dim) + ")";
      case GroupKind::Su2: return "su2";
    }
    return "?";
  }

  double c(int gamma, int alpha, int beta) const {
    return structure[static_cast<std::size_t>(gamma)](alpha, beta);
  }

  VectorXd identity() const { return VectorXd::Zero(dim); }

  // --- chart-domain handling -------------------------------------------------

  template <class T>
  Vec<T> wrap(const Vec<T>& a) const {
    if (kind == GroupKind::Su2) {
      check_domain(a);
      return a;
    }
    Vec<T> out = a;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double k = std::ceil((value_of(a(i)) - std::numbers::pi) / two_pi);
      out(i) = a(i) - T(two_pi * k);
    }
    return out;
  }

  template <class T>
  void check_domain(const Vec<T>& a) const {
    if (a.size() != dim)
      fail(ErrorCode::ChartDomainExceeded, "group point has " + std::to_string(a.size()) +
                                               " coordinates, chart expects " + std::to_string(dim));
    if (kind != GroupKind::Su2) return;
    const double r = values_of(a).norm();
    if (!(r < chart_radius))
      fail(ErrorCode::ChartDomainExceeded, "su2 exponential coordinate |a| = " + std::to_string(r) +
                                               " outside chart radius " + std::to_string(chart_radius));
  }

  // --- group law -------------------------------------------------------------

  template <class T>
  Vec<T> compose(const Vec<T>& a, const Vec<T>& b) const {
    check_domain(a);
    check_domain(b);
    if (kind != GroupKind::Su2) return wrap<T>(a + b);
    return quat_log<T>(quat_mul<T>(quat_exp<T>(a), quat_exp<T>(b)));
  }

  template <class T>
  Vec<T> inverse(const Vec<T>& a) const {
    check_domain(a);
    if (kind != GroupKind::Su2) return wrap<T>(-a);
    return -a;  // exp(-X) = exp(X)^-1
  }

  GroupPoint compose(const GroupPoint& a, const GroupPoint& b) const { return {compose<double>(a.a, b.a)}; }
  GroupPoint inverse(const GroupPoint& a) const { return {inverse<double>(a.a)}; }

  // --- adjoint representation and frames ---------------------------------------

  template <class T>
  Mat<T> rho(const Vec<T>& a) const {
    check_domain(a);
    if (kind != GroupKind::Su2) return Mat<T>::Identity(dim, dim);
    const T s = a.squaredNorm();
    const Mat<T> h = hat<T>(a);
    return Mat<T>::Identity(3, 3) + sinc(s) * h + one_minus_cos(s) * h * h;
  }

  template <class T>
  Mat<T> rho_bar(const Vec<T>& a) const {
    if (kind != GroupKind::Su2) return Mat<T>::Identity(dim, dim);
    return rho<T>(a).transpose();
  }

  /// (ubar, vbar): frame of the left-translation pushforward d(b.a)/db.
  template <class T>
  std::pair<Mat<T>, Mat<T>> left_frame(const Vec<T>& a) const {
    check_domain(a);
    if (kind != GroupKind::Su2) return {Mat<T>::Identity(dim, dim), Mat<T>::Identity(dim, dim)};
    const T s = a.squaredNorm();
    const Mat<T> h = hat<T>(a);
    const Mat<T> I = Mat<T>::Identity(3, 3);
    return {I + one_minus_cos(s) * h + x_minus_sin(s) * h * h,
            I - T(0.5) * h + inv_coeff(s) * h * h};
  }

  /// (u, v): frame of the right-translation pushforward d(a.b)/db; the
  /// columns of v are the left-invariant fields L_alpha.
  template <class T>
  std::pair<Mat<T>, Mat<T>> right_frame(const Vec<T>& a) const {
    check_domain(a);
    if (kind != GroupKind::Su2) return {Mat<T>::Identity(dim, dim), Mat<T>::Identity(dim, dim)};
    const T s = a.squaredNorm();
    const Mat<T> h = hat<T>(a);
    const Mat<T> I = Mat<T>::Identity(3, 3);
    return {I - one_minus_cos(s) * h + x_minus_sin(s) * h * h,
            I + T(0.5) * h + inv_coeff(s) * h * h};
  }

  std::pair<DenseMatrix, DenseMatrix> adjoint(const GroupPoint& a) const {
    return {rho<double>(a.a), rho_bar<double>(a.a)};
  }

  // --- implementation details --------------------------------------------------

  template <class T>
  static Mat<T> hat(const Vec<T>& a) {
    Mat<T> h = Mat<T>::Zero(3, 3);
    h(0, 1) = -a(2);
    h(0, 2) = a(1);
    h(1, 0) = a(2);
    h(1, 2) = -a(0);
    h(2, 0) = -a(1);
    h(2, 1) = a(0);
    return h;
  }

 private:
  // Closed forms as functions of s = theta^2, with Taylor series near zero so
  // dual numbers stay finite at the identity.
  static constexpr double kSeriesCut = 1e-2;

  template <class T>
  static T series(const T& s, const std::array<double, 6>& c) {
    T acc = T(c[5]);
    for (int i = 4; i >= 0; --i) acc = acc * s + T(c[static_cast<std::size_t>(i)]);
    return acc;
  }
  template <class T>
  static T sinc(const T& s) {
    if (value_of(s) < kSeriesCut)
      return series(s, {1.0, -1.0 / 6, 1.0 / 120, -1.0 / 5040, 1.0 / 362880, -1.0 / 39916800});
    const T t = sqrt(s);
    return sin(t) / t;
  }
  template <class T>
  static T one_minus_cos(const T& s) {  // (1 - cos t) / t^2
    if (value_of(s) < kSeriesCut)
      return series(s, {0.5, -1.0 / 24, 1.0 / 720, -1.0 / 40320, 1.0 / 3628800, -1.0 / 479001600});
    return (T(1.0) - cos(sqrt(s))) / s;
  }
  template <class T>
  static T x_minus_sin(const T& s) {  // (t - sin t) / t^3
    if (value_of(s) < kSeriesCut)
      return series(s, {1.0 / 6, -1.0 / 120, 1.0 / 5040, -1.0 / 362880, 1.0 / 39916800,
                        -1.0 / 6227020800});
    const T t = sqrt(s);
    return (t - sin(t)) / (s * t);
  }
  template <class T>
  static T inv_coeff(const T& s) {  // 1/t^2 - (1 + cos t) / (2 t sin t)
    if (value_of(s) < kSeriesCut)
      return series(s, {1.0 / 12, 1.0 / 720, 1.0 / 30240, 1.0 / 1209600, 1.0 / 47900160,
                        691.0 / 1307674368000});
    const T t = sqrt(s);
    return T(1.0) / s - (T(1.0) + cos(t)) / (T(2.0) * t * sin(t));
  }

  template <class T>
  static std::array<T, 4> quat_exp(const Vec<T>& a) {
    const T s = a.squaredNorm();
    T w, k;  // cos(t/2), sin(t/2)/t
    if (value_of(s) < kSeriesCut) {
      w = series(s, {1.0, -1.0 / 8, 1.0 / 384, -1.0 / 46080, 1.0 / 10321920, -1.0 / 3715891200});
      k = series(s, {0.5, -1.0 / 48, 1.0 / 3840, -1.0 / 645120, 1.0 / 185794560, -1.0 / 81749606400});
    } else {
      const T t = sqrt(s);
      w = cos(T(0.5) * t);
      k = sin(T(0.5) * t) / t;
    }
    return {w, k * a(0), k * a(1), k * a(2)};
  }

  template <class T>
  static std::array<T, 4> quat_mul(const std::array<T, 4>& p, const std::array<T, 4>& q) {
    return {p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3],
            p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2],
            p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1],
            p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0]};
  }

  template <class T>
  Vec<T> quat_log(const std::array<T, 4>& q) const {
    const T w = q[0];
    const T s2 = q[1] * q[1] + q[2] * q[2] + q[3] * q[3];
    T k;  // theta / |vec|, theta = 2 atan2(|vec|, w)
    if (value_of(w) > 0.0 && value_of(s2) < 1e-3 * value_of(w * w)) {
      const T x = s2 / (w * w);
      k = T(2.0) / w * series(x, {1.0, -1.0 / 3, 1.0 / 5, -1.0 / 7, 1.0 / 9, -1.0 / 11});
    } else {
      const T sn = sqrt(s2);
      k = T(2.0) * atan2(sn, w) / sn;
    }
    Vec<T> out(3);
    out << k * q[1], k * q[2], k * q[3];
    const double r = values_of(out).norm();
    if (!(r < chart_radius))
      fail(ErrorCode::ChartDomainExceeded,
           "su2 product leaves the exponential chart (|a| = " + std::to_string(r) + ")");
    return out;
  }
};

struct StructureReport {
  double antisymmetry = 0.0;       ///< max |c^g_ab + c^g_ba|
  double jacobi = 0.0;             ///< max Jacobi-identity violation
  double frame_commutator = 0.0;   ///< max |[L_a, L_b] - c^g_ab L_g| at sampled points
  double adjoint_derivative = 0.0; ///< max |L_m rhobar + c rhobar| at sampled points
};

/// Check the algebraic and frame identities of a chart. Frame commutators are
/// evaluated with dual-number derivatives of v(a) at a fixed set of points.
inline StructureReport structure_check(const GroupChart& g) {
  StructureReport rep;
  const int n = g.dim;
  for (int c = 0; c < n; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) rep.antisymmetry = std::max(rep.antisymmetry, std::abs(g.c(c, a, b) + g.c(c, b, a)));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d)
        for (int e = 0; e < n; ++e) {
          double acc = 0.0;
          for (int k = 0; k < n; ++k)
            acc += g.c(k, a, b) * g.c(e, k, d) + g.c(k, b, d) * g.c(e, k, a) + g.c(k, d, a) * g.c(e, k, b);
          rep.jacobi = std::max(rep.jacobi, std::abs(acc));
        }

  std::vector<VectorXd> points{g.identity()};
  if (g.kind == GroupKind::Su2) {
    VectorXd p1(3), p2(3), p3(3);
    p1 << 0.4, 0.0, 0.0;
    p2 << 0.3, -0.7, 0.5;
    p3 << -1.2, 0.9, 1.1;
    points.insert(points.end(), {p1, p2, p3});
  } else {
    points.push_back(VectorXd::Constant(n, 0.8));
  }
  for (const VectorXd& a : points) {
    const DenseMatrix v = g.right_frame<double>(a).second;
    const auto dv = matrix_derivatives_dual([&](const Vec<Dual1>& x) { return g.right_frame<Dual1>(x).second; }, a);
    const auto drb = matrix_derivatives_dual([&](const Vec<Dual1>& x) { return g.rho_bar<Dual1>(x); }, a);
    const DenseMatrix rb = g.rho_bar<double>(a);
    for (int al = 0; al < n; ++al)
      for (int be = 0; be < n; ++be) {
        VectorXd bracket = VectorXd::Zero(n);
        for (int nu = 0; nu < n; ++nu)
          bracket += v(nu, al) * dv[static_cast<std::size_t>(nu)].col(be) - v(nu, be) * dv[static_cast<std::size_t>(nu)].col(al);
        VectorXd expect = VectorXd::Zero(n);
        for (int ga = 0; ga < n; ++ga) expect += g.c(ga, al, be) * v.col(ga);
        rep.frame_commutator = std::max(rep.frame_commutator, (bracket - expect).cwiseAbs().maxCoeff());
      }
    for (int mu = 0; mu < n; ++mu) {
      DenseMatrix L_rb = DenseMatrix::Zero(n, n);
      for (int nu = 0; nu < n; ++nu) L_rb += v(nu, mu) * drb[static_cast<std::size_t>(nu)];
      DenseMatrix c_mu(n, n);
      for (int a = 0; a < n; ++a)
        for (int k = 0; k < n; ++k) c_mu(a, k) = g.c(a, mu, k);
      rep.adjoint_derivative = std::max(rep.adjoint_derivative, (L_rb + c_mu * rb).cwiseAbs().maxCoeff());
    }
  }
  return rep;
}

}  // namespace lpr
