#pragma once

// A mechanical system: metric, potential, right group action, Killing fields
// and gauge functions on an open subset of R^n, plus the built-in examples.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <utility>

#include "lpr/error.hpp"
#include "lpr/lie_group.hpp"
#include "lpr/numerics/diff.hpp"
#include "lpr/numerics/linalg.hpp"

namespace lpr {

using PointPredicate = std::function<bool(const VectorXd&)>;
using PointSampler = std::function<VectorXd(std::mt19937_64&)>;

struct SystemModel {
  std::string name;
  int n_p = 0;
  GroupChart group;
  MatFamily metric;        ///< Q -> G_AB
  ScalarFamily potential;  ///< Q -> V
  ActionFamily action;     ///< (Q, a) -> F(Q, a)
  MatFamily killing;       ///< Q -> K (n_p x dim)
  VecFamily gauge;         ///< Q -> chi (dim)
  DiffScheme diff;
  PointPredicate domain_guard;   ///< false on the excluded singular loci
  PointPredicate section_guard;  ///< selects the branch of chi = 0 used as the section
  std::function<VectorXd(const VectorXd&)> fibre_guess;  ///< starting a with Q ~ F(Q*, a)
  PointSampler sampler;          ///< random points of the domain for the checks

  int n_g() const { return group.dim; }

  bool in_domain(const VectorXd& q) const { return !domain_guard || domain_guard(q); }
  bool on_section_branch(const VectorXd& q) const { return !section_guard || section_guard(q); }

  void require_domain(const VectorXd& q) const {
    if (q.size() != n_p)
      fail(ErrorCode::DomainViolation, name + ": point has " + std::to_string(q.size()) + " coordinates, expected " +
                                           std::to_string(n_p));
    if (!all_finite(q)) fail(ErrorCode::DomainViolation, name + ": non-finite point");
    if (!in_domain(q)) fail(ErrorCode::DomainViolation, name + ": point outside the model domain");
  }

  DenseMatrix G(const VectorXd& q) const { return detail::guarded_call(metric.f0, q); }
  double V(const VectorXd& q) const { return detail::guarded_call(potential.f0, q); }
  DenseMatrix K(const VectorXd& q) const { return detail::guarded_call(killing.f0, q); }
  VectorXd chi(const VectorXd& q) const { return detail::guarded_call(gauge.f0, q); }
  VectorXd act(const VectorXd& q, const VectorXd& a) const { return detail::guarded_call(action.f0, q, a); }

  /// d chi / dQ at q.
  DenseMatrix chi_jacobian(const VectorXd& q) const { return jacobian(gauge, q, diff); }

  /// dF(Q, a)/dQ at fixed a.
  DenseMatrix action_jacobian_q(const VectorXd& q, const VectorXd& a) const {
    if (diff.is_dual() && action.has<Dual1>()) {
      const Vec<Dual1> ad = cast_vec<Dual1>(a);
      return jacobian_dual([&](const Vec<Dual1>& x) { return action.f1(x, ad); }, q);
    }
    return jacobian_central([&](const VectorXd& x) { return action.f0(x, a); }, q, diff.is_dual() ? 1e-6 : diff.step);
  }

  /// dF(Q, a)/da at fixed Q.
  DenseMatrix action_jacobian_a(const VectorXd& q, const VectorXd& a) const {
    if (diff.is_dual() && action.has<Dual1>()) {
      const Vec<Dual1> qd = cast_vec<Dual1>(q);
      return jacobian_dual([&](const Vec<Dual1>& b) { return action.f1(qd, b); }, a);
    }
    return jacobian_central([&](const VectorXd& b) { return action.f0(q, b); }, a, diff.is_dual() ? 1e-6 : diff.step);
  }
};

/// Random group element: uniform angles for circle/torus, a ball of radius 1 for su2.
inline VectorXd sample_group(const GroupChart& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorXd a(g.dim);
  if (g.kind != GroupKind::Su2) {
    for (int i = 0; i < g.dim; ++i) a(i) = std::numbers::pi * u(rng);
    return a;
  }
  do {
    for (int i = 0; i < 3; ++i) a(i) = u(rng);
  } while (a.norm() >= 1.0);
  return a;
}

// --- built-in models ---------------------------------------------------------

struct PlanarRotorParams {
  double k = 1.0;
  double r0 = 1.0;
  double min_radius = 0.05;
};

/// Point mass in the plane, rotations about the origin, section y = 0, x > 0.
inline SystemModel make_planar_rotor(const PlanarRotorParams& par = {}) {
  if (!(par.k >= 0.0)) fail(ErrorCode::OutOfRange, "planar-rotor: k must be non-negative");
  if (!(par.r0 >= 0.0)) fail(ErrorCode::OutOfRange, "planar-rotor: r0 must be non-negative");
  if (!(par.min_radius > 0.0)) fail(ErrorCode::OutOfRange, "planar-rotor: min_radius must be positive");
  SystemModel m;
  m.name = "planar-rotor";
  m.n_p = 2;
  m.group = GroupChart::circle();
  m.metric = MatFamily::from([](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return Mat<T>::Identity(2, 2).eval();
  });
  const double k = par.k, r0 = par.r0;
  m.potential = ScalarFamily::from([k, r0](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    if (r0 == 0.0) return T(0.5 * k) * (q(0) * q(0) + q(1) * q(1));
    const T r = sqrt(q(0) * q(0) + q(1) * q(1));
    return T(0.5 * k) * square(r - T(r0));
  });
  m.action = ActionFamily::from([](const auto& q, const auto& a) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    const T c = cos(a(0)), s = sin(a(0));
    Vec<T> out(2);
    out << c * q(0) - s * q(1), s * q(0) + c * q(1);
    return out;
  });
  m.killing = MatFamily::from([](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    Mat<T> k_(2, 1);
    k_ << -q(1), q(0);
    return k_;
  });
  m.gauge = VecFamily::from([](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    Vec<T> c(1);
    c << q(1);
    return c;
  });
  const double rmin = par.min_radius;
  m.domain_guard = [rmin](const VectorXd& q) { return q.norm() >= rmin; };
  m.section_guard = [](const VectorXd& q) { return q(0) > 0.0; };
  m.fibre_guess = [](const VectorXd& q) { return VectorXd::Constant(1, std::atan2(q(1), q(0))); };
  m.sampler = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> r(0.5, 2.5), th(-std::numbers::pi, std::numbers::pi);
    const double rr = r(rng), t = th(rng);
    VectorXd q(2);
    q << rr * std::cos(t), rr * std::sin(t);
    return q;
  };
  return m;
}

struct HopfParams {
  double v0 = 0.5;
  double min_radius = 0.05;
};

/// C^2 = R^4 with the diagonal phase action, section y1 = 0, x1 > 0.
inline SystemModel make_hopf(const HopfParams& par = {}) {
  if (!(par.min_radius > 0.0)) fail(ErrorCode::OutOfRange, "hopf: min_radius must be positive");
  SystemModel m;
  m.name = "hopf";
  m.n_p = 4;
  m.group = GroupChart::circle();
  m.metric = MatFamily::from([](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return Mat<T>::Identity(4, 4).eval();
  });
  const double v0 = par.v0;
  m.potential = ScalarFamily::from([v0](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return T(v0) * q.squaredNorm();
  });
  m.action = ActionFamily::from([](const auto& q, const auto& a) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    const T c = cos(a(0)), s = sin(a(0));
    Vec<T> out(4);
    out << c * q(0) - s * q(1), s * q(0) + c * q(1), c * q(2) - s * q(3), s * q(2) + c * q(3);
    return out;
  });
  m.killing = MatFamily::from([](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    Mat<T> k(4, 1);
    k << -q(1), q(0), -q(3), q(2);
    return k;
  });
  m.gauge = VecFamily::from([](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    Vec<T> c(1);
    c << q(1);
    return c;
  });
  const double rmin = par.min_radius;
  m.domain_guard = [rmin](const VectorXd& q) { return q.norm() >= rmin; };
  m.section_guard = [](const VectorXd& q) { return q(0) > 0.0; };
  m.fibre_guess = [](const VectorXd& q) { return VectorXd::Constant(1, std::atan2(q(1), q(0))); };
  m.sampler = [](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    VectorXd q(4);
    do {
      for (int i = 0; i < 4; ++i) q(i) = u(rng);
    } while (std::hypot(q(0), q(1)) < 0.3);
    return q;
  };
  return m;
}

struct TwistedSu2Params {
  MatFamily connection;  ///< x -> A (3 x 2); empty means A = 0
  double kappa = 1.0;
  VectorXd inertia = VectorXd::Ones(3);  ///< vertical metric kappa * diag(inertia) at the identity
  double k = 1.0;        ///< base potential 1/2 k |x|^2
};

/// Connection A^1_1 = twist * x_2, all other components zero.
inline MatFamily linear_twist_connection(double twist) {
  return MatFamily::from([twist](const auto& x) {
    using T = typename std::decay_t<decltype(x)>::Scalar;
    Mat<T> A = Mat<T>::Zero(3, 2);
    A(0, 0) = T(twist) * x(1);
    return A;
  });
}

/// R^2 x SU(2) with right multiplication on the fibre and the Kaluza-Klein
/// metric |dx|^2 + kappa (theta + A dx)^T diag(inertia) (theta + A dx), theta the
/// right-invariant Maurer-Cartan form. Equal inertia gives a bi-invariant fibre.
/// Coordinates (x1, x2, a1, a2, a3); the section is a = 0.
inline SystemModel make_twisted_su2(TwistedSu2Params par = {}) {
  if (!(par.kappa > 0.0)) fail(ErrorCode::OutOfRange, "twisted-su2: kappa must be positive");
  if (par.inertia.size() != 3 || !(par.inertia.minCoeff() > 0.0))
    fail(ErrorCode::OutOfRange, "twisted-su2: inertia must be three positive numbers");
  if (!par.connection.f0) par.connection = linear_twist_connection(0.0);
  SystemModel m;
  m.name = "twisted-su2";
  m.n_p = 5;
  m.group = GroupChart::su2();
  const GroupChart g = m.group;
  const MatFamily conn = par.connection;
  const VectorXd D = par.kappa * par.inertia;
  const double kb = par.k;

  auto metric = [g, conn, D](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    const Vec<T> x = q.head(2), a = q.tail(3);
    const Mat<T> A = conn.template at<T>()(x);
    Mat<T> M(3, 5);
    M.leftCols(2) = A;
    M.rightCols(3) = g.left_frame<T>(a).first;
    Mat<T> W = Mat<T>::Zero(3, 3);
    for (int i = 0; i < 3; ++i) W(i, i) = T(D(i));
    Mat<T> G = M.transpose() * W * M;
    G(0, 0) += T(1.0);
    G(1, 1) += T(1.0);
    return G;
  };
  if (conn.has<Dual2>()) {
    m.metric = MatFamily::from(metric);
  } else {
    m.metric.f0 = metric;
  }
  m.potential = ScalarFamily::from([kb](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return T(0.5 * kb) * (q(0) * q(0) + q(1) * q(1));
  });
  m.action = ActionFamily::from([g](const auto& q, const auto& b) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    Vec<T> out(5);
    out.head(2) = q.head(2);
    out.tail(3) = g.compose<T>(Vec<T>(q.tail(3)), b);
    return out;
  });
  m.killing = MatFamily::from([g](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    Mat<T> k = Mat<T>::Zero(5, 3);
    k.bottomRows(3) = g.right_frame<T>(Vec<T>(q.tail(3))).second;
    return k;
  });
  m.gauge = VecFamily::from([](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    return Vec<T>(q.tail(3));
  });
  m.domain_guard = [g](const VectorXd& q) { return q.tail(3).norm() < g.chart_radius; };
  m.fibre_guess = [](const VectorXd& q) { return VectorXd(q.tail(3)); };
  m.sampler = [g](std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    VectorXd q(5);
    q(0) = u(rng);
    q(1) = u(rng);
    q.tail(3) = sample_group(g, rng);
    return q;
  };
  return m;
}

}  // namespace lpr
