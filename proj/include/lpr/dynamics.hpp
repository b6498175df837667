#pragma once

// Unreduced Euler-Lagrange flow on the configuration space and the reduced
// flow in dependent coordinates (Q*, omega, p, a) with group reconstruction.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "lpr/bundle_geometry.hpp"
#include "lpr/error.hpp"
#include "lpr/lie_group.hpp"
#include "lpr/numerics/linalg.hpp"
#include "lpr/numerics/ode.hpp"
#include "lpr/system_model.hpp"

namespace lpr {

struct FullState {
  VectorXd Q, Qdot;
};

struct ReducedState {
  VectorXd q_star;  ///< point of the gauge surface
  VectorXd omega;   ///< horizontal quasi-velocity, tangent to the surface
  VectorXd p;       ///< reduced momentum
  VectorXd a;       ///< group reconstruction variable
};

enum class Mode { Full, Reduced };

inline std::string mode_name(Mode m) { return m == Mode::Full ? "full" : "reduced"; }

// --- full space ------------------------------------------------------------------

/// Qdd = -Gamma(Qd, Qd) - G^-1 grad V for L = 1/2 G Qd Qd - V.
inline std::pair<VectorXd, VectorXd> full_rhs(const SystemModel& m, const FullState& s) {
  m.require_domain(s.Q);
  const int n = m.n_p;
  const DenseMatrix G = m.G(s.Q);
  const Tensor3 dG = matrix_derivatives(m.metric, s.Q, m.diff);
  const VectorXd gradV = gradient(m.potential, s.Q, m.diff);
  VectorXd w = gradV;
  for (int b = 0; b < n; ++b) w += s.Qdot(b) * (dG[static_cast<std::size_t>(b)] * s.Qdot);
  for (int d = 0; d < n; ++d) w(d) -= 0.5 * s.Qdot.dot(dG[static_cast<std::size_t>(d)] * s.Qdot);
  return {s.Qdot, -solve_linear(G, w)};
}

inline double energy(const SystemModel& m, const FullState& s) {
  return 0.5 * s.Qdot.dot(m.G(s.Q) * s.Qdot) + m.V(s.Q);
}

// --- conversions -------------------------------------------------------------------

inline ReducedState to_reduced(const SystemModel& m, const FullState& s) {
  if (s.Qdot.size() != m.n_p || !all_finite(s.Qdot)) fail(ErrorCode::NonFiniteState, m.name + ": malformed velocity");
  const auto [p, a] = project_to_sigma(m, s.Q);
  const VectorXd b = m.group.inverse<double>(a.a);
  const VectorXd W = m.action_jacobian_q(s.Q, b) * s.Qdot;
  const BundleFrame<double> f = bundle_frame_at(m, p.q_star);
  ReducedState r;
  r.q_star = p.q_star;
  r.omega = f.N * W;
  const VectorXd xi = f.Lambda * W;
  r.p = f.gamma * (xi + f.A_conn * r.omega);
  r.a = a.a;
  return r;
}

inline FullState to_full(const SystemModel& m, const ReducedState& r) {
  m.group.check_domain(r.a);
  const BundleFrame<double> f = bundle_frame_at(m, r.q_star);
  const VectorXd xi = f.gamma_inv * r.p - f.A_conn * r.omega;
  const VectorXd W = r.omega + f.K * xi;
  FullState s;
  s.Q = m.act(r.q_star, r.a);
  s.Qdot = m.action_jacobian_q(r.q_star, r.a) * W;
  return s;
}

inline double energy(const SystemModel& m, const GeometryCache& c, const ReducedState& r) {
  return 0.5 * r.omega.dot(c.G_H * r.omega) + 0.5 * r.p.dot(c.gamma_inv * r.p) + m.V(r.q_star);
}

inline double energy(const SystemModel& m, const ReducedState& r) {
  const BundleFrame<double> f = bundle_frame_at(m, r.q_star);
  return 0.5 * r.omega.dot(f.G_H * r.omega) + 0.5 * r.p.dot(f.gamma_inv * r.p) + m.V(r.q_star);
}

// --- reduced flow ------------------------------------------------------------------

struct ReducedRates {
  VectorXd q_star, omega, p, a;
};

/// Individual force terms of the horizontal equation, exposed for diagnostics.
struct HorizontalForces {
  VectorXd christoffel;   ///< Gamma_H(omega, omega)
  VectorXd curvature;     ///< G^-1 N^T (F^mu_AB p_mu omega^A)
  VectorXd vertical;      ///< 1/2 G^-1 N^T (D gamma^-1 p p)
  VectorXd potential;     ///< G^-1 N^T grad V
  VectorXd completion;    ///< K Phi^-1 chi_hess(omega, omega)
};

inline HorizontalForces horizontal_forces(const GeometryCache& c, const VectorXd& omega, const VectorXd& p) {
  const int n = c.n_p(), ng = c.n_g();
  HorizontalForces out;
  out.christoffel = VectorXd::Zero(n);
  for (int d = 0; d < n; ++d) out.christoffel(d) = omega.dot(c.Gamma_H[static_cast<std::size_t>(d)] * omega);
  VectorXd Y = VectorXd::Zero(n);
  for (int mu = 0; mu < ng; ++mu) Y += p(mu) * c.F_curv[static_cast<std::size_t>(mu)].transpose() * omega;
  const DenseMatrix GiNt = c.G_inv * c.N.transpose();
  out.curvature = GiNt * Y;
  VectorXd Z(n);
  for (int s = 0; s < n; ++s) Z(s) = p.dot(c.D_gamma_inv[static_cast<std::size_t>(s)] * p);
  out.vertical = 0.5 * GiNt * Z;
  out.potential = GiNt * c.gradV;
  VectorXd h(ng);
  for (int mu = 0; mu < ng; ++mu) h(mu) = omega.dot(c.chi_hess[static_cast<std::size_t>(mu)] * omega);
  out.completion = c.K * (c.Phi_inv * h);
  return out;
}

inline ReducedRates reduced_rhs(const SystemModel& m, const GeometryCache& c, const ReducedState& r) {
  const GroupChart& g = m.group;
  const int ng = c.n_g();
  ReducedRates d;
  d.q_star = r.omega;
  const HorizontalForces f = horizontal_forces(c, r.omega, r.p);
  d.omega = -c.N * (f.christoffel + f.curvature + f.vertical + f.potential) - f.completion;
  // xi = gamma^-1 p - A omega is the vertical rate at Q*
  const VectorXd xi = c.gamma_inv * r.p - c.A_conn * r.omega;
  d.p = VectorXd::Zero(ng);
  if (!g.abelian()) {
    for (int be = 0; be < ng; ++be)
      for (int nu = 0; nu < ng; ++nu)
        for (int ep = 0; ep < ng; ++ep) d.p(be) -= g.c(nu, ep, be) * xi(ep) * r.p(nu);
  }
  // da/dt = v (omega^alpha - rhobar A omega) with omega^alpha = rhobar gamma^-1 p
  const DenseMatrix v = g.right_frame<double>(r.a).second;
  d.a = v * (g.rho_bar<double>(r.a) * xi);
  return d;
}

inline ReducedRates reduced_rhs(const SystemModel& m, const ReducedState& r) {
  return reduced_rhs(m, geometry_at(m, SigmaPoint{r.q_star}), r);
}

// --- state packing -----------------------------------------------------------------

inline VectorXd pack(const FullState& s) {
  VectorXd y(s.Q.size() + s.Qdot.size());
  y << s.Q, s.Qdot;
  return y;
}

inline FullState unpack_full(const VectorXd& y, int n) { return {y.head(n), y.segment(n, n)}; }

inline VectorXd pack(const ReducedState& r) {
  VectorXd y(r.q_star.size() + r.omega.size() + r.p.size() + r.a.size());
  y << r.q_star, r.omega, r.p, r.a;
  return y;
}

inline ReducedState unpack_reduced(const VectorXd& y, int n, int g) {
  return {y.head(n), y.segment(n, n), y.segment(2 * n, g), y.segment(2 * n + g, g)};
}

// --- integration -------------------------------------------------------------------

struct Trajectory {
  Mode mode = Mode::Reduced;
  std::vector<double> t;
  std::vector<FullState> full;
  std::vector<ReducedState> reduced;
  std::vector<double> energy, chi_resid, tang_resid;

  std::size_t size() const { return t.size(); }
};

struct IntegrateOptions {
  double t_end = 10.0;
  double dt = 1e-3;
  int project_every = 10;  ///< 0 disables the post-step projection
};

namespace detail {

inline void validate(const IntegrateOptions& opt) {
  if (!(opt.t_end > 0.0) || !std::isfinite(opt.t_end)) fail(ErrorCode::OutOfRange, "t_end must be positive");
  if (!(opt.dt > 0.0) || !std::isfinite(opt.dt)) fail(ErrorCode::OutOfRange, "dt must be positive");
  if (opt.project_every < 0) fail(ErrorCode::OutOfRange, "project_every must be non-negative");
}

inline long step_count(const IntegrateOptions& opt) {
  const double steps = opt.t_end / opt.dt;
  const long n = std::lround(steps);
  if (n < 1 || std::abs(steps - static_cast<double>(n)) > 1e-9 * steps)
    fail(ErrorCode::OutOfRange, "t_end must be an integer multiple of dt");
  return n;
}

// One Newton step back onto the gauge surface along chi^T, then omega <- P_perp omega.
inline void stabilize(const SystemModel& m, ReducedState& r) {
  const BundleFrame<double> f = bundle_frame_at(m, r.q_star);
  const VectorXd chi = m.chi(r.q_star);
  r.q_star -= f.chi_T * solve_linear(DenseMatrix(f.chi_jac * f.chi_T), chi);
  r.omega = bundle_frame_at(m, r.q_star).P_perp * r.omega;
}

inline void record(const SystemModel& m, Trajectory& tr, double t, const ReducedState& r) {
  const BundleFrame<double> f = bundle_frame_at(m, r.q_star);
  tr.t.push_back(t);
  tr.reduced.push_back(r);
  tr.energy.push_back(0.5 * r.omega.dot(f.G_H * r.omega) + 0.5 * r.p.dot(f.gamma_inv * r.p) + m.V(r.q_star));
  tr.chi_resid.push_back(m.chi(r.q_star).norm());
  tr.tang_resid.push_back((f.Lambda * r.omega).norm());
}

inline void record(const SystemModel& m, Trajectory& tr, double t, const FullState& s) {
  tr.t.push_back(t);
  tr.full.push_back(s);
  tr.energy.push_back(energy(m, s));
  tr.chi_resid.push_back(0.0);
  tr.tang_resid.push_back(0.0);
}

}  // namespace detail

inline Trajectory integrate_full(const SystemModel& m, const FullState& s0, const IntegrateOptions& opt) {
  detail::validate(opt);
  const long steps = detail::step_count(opt);
  const int n = m.n_p;
  const StateDerivative rhs = [&](const VectorXd& y, double) {
    const auto [dq, ddq] = full_rhs(m, unpack_full(y, n));
    VectorXd out(2 * n);
    out << dq, ddq;
    return out;
  };
  Trajectory tr;
  tr.mode = Mode::Full;
  VectorXd y = pack(s0);
  detail::record(m, tr, 0.0, s0);
  for (long i = 0; i < steps; ++i) {
    y = rk4_step(rhs, y, static_cast<double>(i) * opt.dt, opt.dt);
    detail::record(m, tr, static_cast<double>(i + 1) * opt.dt, unpack_full(y, n));
  }
  return tr;
}

inline Trajectory integrate_reduced(const SystemModel& m, const ReducedState& r0, const IntegrateOptions& opt) {
  detail::validate(opt);
  const long steps = detail::step_count(opt);
  const int n = m.n_p, g = m.n_g();
  const StateDerivative rhs = [&](const VectorXd& y, double) {
    const ReducedRates d = reduced_rhs(m, unpack_reduced(y, n, g));
    VectorXd out(2 * n + 2 * g);
    out << d.q_star, d.omega, d.p, d.a;
    return out;
  };
  Trajectory tr;
  tr.mode = Mode::Reduced;
  ReducedState r = r0;
  detail::record(m, tr, 0.0, r);
  for (long i = 0; i < steps; ++i) {
    r = unpack_reduced(rk4_step(rhs, pack(r), static_cast<double>(i) * opt.dt, opt.dt), n, g);
    r.a = m.group.wrap<double>(r.a);
    if (opt.project_every > 0 && (i + 1) % opt.project_every == 0) detail::stabilize(m, r);
    detail::record(m, tr, static_cast<double>(i + 1) * opt.dt, r);
  }
  return tr;
}

/// Integrate in the requested mode; a full initial state is converted for reduced runs.
inline Trajectory integrate(const SystemModel& m, const FullState& s0, Mode mode, const IntegrateOptions& opt) {
  if (mode == Mode::Full) return integrate_full(m, s0, opt);
  return integrate_reduced(m, to_reduced(m, s0), opt);
}

inline Trajectory integrate(const SystemModel& m, const ReducedState& r0, Mode mode, const IntegrateOptions& opt) {
  if (mode == Mode::Reduced) return integrate_reduced(m, r0, opt);
  return integrate_full(m, to_full(m, r0), opt);
}

// --- comparison --------------------------------------------------------------------

struct DeviationReport {
  std::vector<double> per_sample;  ///< max over components at each sample
  double q_star = 0.0, a = 0.0, omega = 0.0, p = 0.0;
  double max_dev = 0.0;
};

/// Difference of group coordinates; angles are compared modulo 2 pi.
inline VectorXd group_difference(const GroupChart& g, const VectorXd& x, const VectorXd& y) {
  if (g.kind == GroupKind::Su2) return x - y;
  return g.wrap<double>(VectorXd(x - y));
}

inline DeviationReport compare_trajectories(const SystemModel& m, const Trajectory& full, const Trajectory& reduced) {
  if (full.mode != Mode::Full || reduced.mode != Mode::Reduced)
    fail(ErrorCode::GridMismatch, "compare_trajectories expects a full and a reduced trajectory");
  if (full.size() != reduced.size())
    fail(ErrorCode::GridMismatch, "trajectories have " + std::to_string(full.size()) + " and " +
                                      std::to_string(reduced.size()) + " samples");
  DeviationReport rep;
  for (std::size_t i = 0; i < full.size(); ++i) {
    if (std::abs(full.t[i] - reduced.t[i]) > 1e-12 * std::max(1.0, std::abs(full.t[i])))
      fail(ErrorCode::GridMismatch, "time grids differ at sample " + std::to_string(i));
    const ReducedState x = to_reduced(m, full.full[i]);
    const ReducedState& y = reduced.reduced[i];
    const double dq = (x.q_star - y.q_star).cwiseAbs().maxCoeff();
    const double da = group_difference(m.group, x.a, y.a).cwiseAbs().maxCoeff();
    const double dw = (x.omega - y.omega).cwiseAbs().maxCoeff();
    const double dp = (x.p - y.p).cwiseAbs().maxCoeff();
    rep.q_star = std::max(rep.q_star, dq);
    rep.a = std::max(rep.a, da);
    rep.omega = std::max(rep.omega, dw);
    rep.p = std::max(rep.p, dp);
    rep.per_sample.push_back(std::max({dq, da, dw, dp}));
  }
  rep.max_dev = std::max({rep.q_star, rep.a, rep.omega, rep.p});
  return rep;
}

}  // namespace lpr
