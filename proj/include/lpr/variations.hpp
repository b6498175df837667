#pragma once

// Numerical check of the relations between u-derivatives of the quasi-velocities and
// t-derivatives of the variations in the (H, L) frame.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include "lpr/bundle_geometry.hpp"
#include "lpr/system_model.hpp"

namespace lpr {

using PathFn = std::function<VectorXd(double)>;

struct VariationFamily {
  double t1 = 0.0, t2 = 1.0;
  PathFn base_q;      ///< base path on the gauge surface
  PathFn base_a;      ///< base group path
  PathFn w_h, w_h_dot;  ///< horizontal variation (Lambda w = 0) and its time derivative
  PathFn w_v, w_v_dot;  ///< vertical variation and its time derivative
  int samples = 8;    ///< interior sample times t1 + k (t2 - t1) / samples

  std::vector<double> times() const {
    std::vector<double> ts;
    for (int k = 1; k < samples; ++k) ts.push_back(t1 + (t2 - t1) * k / samples);
    return ts;
  }
};

namespace detail {

inline PathFn richardson_derivative(PathFn f, double s) {
  return [f = std::move(f), s](double t) {
    return VectorXd((f(t - 2 * s) - 8.0 * f(t - s) + 8.0 * f(t + s) - f(t + 2 * s)) / (12.0 * s));
  };
}

inline VectorXd random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

}  // namespace detail

/// Seeded smooth family on [0, 1]: a projected trigonometric base path, variations that
/// vanish at both ends, horizontal variation projected tangent to the surface.
inline VariationFamily make_variation_family(const SystemModel& m, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  const int n = m.n_p, g = m.n_g();
  const VectorXd q_c = project_to_sigma(m, m.sampler(rng)).first.q_star;
  const VectorXd amp = detail::random_vector(rng, n, -0.15, 0.15);
  const VectorXd phase = detail::random_vector(rng, n, 0.0, 2 * std::numbers::pi);
  VectorXd a_c = sample_group(m.group, rng);
  if (m.group.kind == GroupKind::Su2) a_c *= 0.5;
  const VectorXd a_amp = detail::random_vector(rng, g, -0.4, 0.4);
  const VectorXd w_b = detail::random_vector(rng, n, -1.0, 1.0);
  const VectorXd w_d = detail::random_vector(rng, n, -1.0, 1.0);
  const VectorXd v_b = detail::random_vector(rng, g, -1.0, 1.0);
  const VectorXd v_d = detail::random_vector(rng, g, -1.0, 1.0);

  VariationFamily fam;
  fam.base_q = [m, q_c, amp, phase](double t) {
    VectorXd c = q_c;
    for (int i = 0; i < c.size(); ++i) c(i) += amp(i) * std::sin(2.0 * t + phase(i));
    return project_to_sigma(m, c).first.q_star;
  };
  fam.base_a = [a_c, a_amp](double t) { return VectorXd(a_c + a_amp * std::sin(1.5 * t)); };
  const PathFn base_q = fam.base_q;
  fam.w_h = [m, base_q, w_b, w_d](double t) {
    const VectorXd raw = w_b + w_d * std::cos(3.0 * t);
    return VectorXd(std::sin(std::numbers::pi * t) * (bundle_frame_at(m, base_q(t)).P_perp * raw));
  };
  fam.w_h_dot = detail::richardson_derivative(fam.w_h, 2e-3);
  fam.w_v = [v_b, v_d](double t) { return VectorXd(std::sin(std::numbers::pi * t) * (v_b + v_d * std::sin(2.0 * t))); };
  fam.w_v_dot = [v_b, v_d](double t) {
    return VectorXd(std::numbers::pi * std::cos(std::numbers::pi * t) * (v_b + v_d * std::sin(2.0 * t)) +
                    std::sin(std::numbers::pi * t) * 2.0 * std::cos(2.0 * t) * v_d);
  };
  return fam;
}

/// Terms of the identities that can be switched off to show they are active.
struct VariationTerms {
  bool structure = true;  ///< nonholonomic horizontal constants, or group constants c in the vertical relation
  bool curvature = true;  ///< curvature term of the vertical relation
};

namespace detail {

struct Deformed {
  VectorXd q, a;
};

// One explicit Euler step of size u along w^E H_E + w^alpha L_alpha from the base path.
inline Deformed deform(const SystemModel& m, const VariationFamily& fam, double u, double t) {
  const VectorXd q0 = fam.base_q(t), a0 = fam.base_a(t);
  const BundleFrame<double> f = bundle_frame_at(m, q0);
  const VectorXd nw = f.N * fam.w_h(t);
  const DenseMatrix v = m.group.right_frame<double>(a0).second;
  return {q0 + u * nw, a0 + u * (v * (fam.w_v(t) - m.group.rho_bar<double>(a0) * (f.A_conn * nw)))};
}

struct Quasi {
  VectorXd omega_h, omega_v;
};

// Quasi-velocities of the deformed path: omega = P_perp dQ*/dt, omega^alpha = u(a) da/dt + rhobar A omega.
inline Quasi quasi_velocities(const SystemModel& m, const VariationFamily& fam, double u, double t, double h) {
  const Deformed x = deform(m, fam, u, t);
  const Deformed xp = deform(m, fam, u, t + h), xm = deform(m, fam, u, t - h);
  const BundleFrame<double> f = bundle_frame_at(m, x.q);
  Quasi out;
  out.omega_h = f.P_perp * ((xp.q - xm.q) / (2 * h));
  const DenseMatrix uu = m.group.right_frame<double>(x.a).first;
  out.omega_v = uu * ((xp.a - xm.a) / (2 * h)) + m.group.rho_bar<double>(x.a) * (f.A_conn * out.omega_h);
  return out;
}

}  // namespace detail

/// max over samples of |N (d omega/du - dw/dt + C^R_PE omega^E w^P)|.
inline double check_horizontal_variation(const SystemModel& m, const VariationFamily& fam, double h,
                                         VariationTerms terms = {}) {
  double worst = 0.0;
  for (double t : fam.times()) {
    const VectorXd q0 = fam.base_q(t);
    const GeometryCache c = geometry_at(m, SigmaPoint{q0});
    const detail::Quasi qp = detail::quasi_velocities(m, fam, h, t, h);
    const detail::Quasi qm = detail::quasi_velocities(m, fam, -h, t, h);
    const detail::Quasi q0v = detail::quasi_velocities(m, fam, 0.0, t, h);
    const VectorXd w = fam.w_h(t);
    VectorXd r = (qp.omega_h - qm.omega_h) / (2 * h) - fam.w_h_dot(t);
    if (terms.structure)
      for (int R = 0; R < c.n_p(); ++R) r(R) += w.dot(c.C_horiz[static_cast<std::size_t>(R)] * q0v.omega_h);
    worst = std::max(worst, (c.N * r).cwiseAbs().maxCoeff());
  }
  return worst;
}

/// max over samples of |d omega^b/du - dw^b/dt - c^b_{a m} omega^a w^m - (N w)^T Ftilde^b (N omega)|.
inline double check_vertical_variation(const SystemModel& m, const VariationFamily& fam, double h,
                                       VariationTerms terms = {}) {
  const GroupChart& g = m.group;
  const int ng = g.dim;
  double worst = 0.0;
  for (double t : fam.times()) {
    const VectorXd q0 = fam.base_q(t), a0 = fam.base_a(t);
    const GeometryCache c = geometry_at(m, SigmaPoint{q0});
    const detail::Quasi qp = detail::quasi_velocities(m, fam, h, t, h);
    const detail::Quasi qm = detail::quasi_velocities(m, fam, -h, t, h);
    const detail::Quasi q0v = detail::quasi_velocities(m, fam, 0.0, t, h);
    const VectorXd wv = fam.w_v(t);
    VectorXd r = (qp.omega_v - qm.omega_v) / (2 * h) - fam.w_v_dot(t);
    if (terms.structure)
      for (int be = 0; be < ng; ++be)
        for (int al = 0; al < ng; ++al)
          for (int mu = 0; mu < ng; ++mu) r(be) -= g.c(be, al, mu) * q0v.omega_v(al) * wv(mu);
    if (terms.curvature) {
      const VectorXd nw = c.N * fam.w_h(t), nom = c.N * q0v.omega_h;
      VectorXd flat(ng);
      for (int mu = 0; mu < ng; ++mu) flat(mu) = nw.dot(c.F_curv[static_cast<std::size_t>(mu)] * nom);
      r -= g.rho_bar<double>(a0) * flat;
    }
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

struct ConvergenceReport {
  double h = 0.0;
  double residual = 0.0;       ///< at step h
  double residual_half = 0.0;  ///< at step h / 2
  double order = 0.0;          ///< log2 of the ratio
};

inline ConvergenceReport variation_convergence(const SystemModel& m, const VariationFamily& fam, double h,
                                               bool vertical, VariationTerms terms = {}) {
  const auto run = [&](double s) {
    return vertical ? check_vertical_variation(m, fam, s, terms) : check_horizontal_variation(m, fam, s, terms);
  };
  ConvergenceReport rep;
  rep.h = h;
  rep.residual = run(h);
  rep.residual_half = run(h / 2);
  rep.order = std::log2(rep.residual / rep.residual_half);
  return rep;
}

}  // namespace lpr
