#pragma once

// Relative equilibria on the gauge surface: omega = 0 with stationary (Q*, p).

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "lpr/bundle_geometry.hpp"
#include "lpr/error.hpp"
#include "lpr/system_model.hpp"

namespace lpr {

struct EquilibriumProblem {
  SystemModel model;
  VectorXd q_star0;
  VectorXd p0;
  double tol = 1e-10;
  int max_iter = 50;
  bool fix_momentum = false;
};

struct EquilibriumResult {
  SigmaPoint q_star;
  VectorXd p;
  double residual_norm = 0.0;
  int iterations = 0;
};

/// [N G^-1 N^T (1/2 D gamma^-1 p p + dV) ; c^nu_{e b} gamma^{e f} p_f p_nu]
inline VectorXd equilibrium_residual(const GeometryCache& c, const GroupChart& g, const VectorXd& p) {
  const int n = c.n_p(), ng = c.n_g();
  VectorXd Y = c.gradV;
  for (int s = 0; s < n; ++s) Y(s) += 0.5 * p.dot(c.D_gamma_inv[static_cast<std::size_t>(s)] * p);
  VectorXd out(n + ng);
  out.head(n) = c.N * (c.G_inv * (c.N.transpose() * Y));
  const VectorXd xi = c.gamma_inv * p;
  for (int be = 0; be < ng; ++be) {
    double acc = 0.0;
    if (!g.abelian())
      for (int nu = 0; nu < ng; ++nu)
        for (int ep = 0; ep < ng; ++ep) acc += g.c(nu, ep, be) * xi(ep) * p(nu);
    out(n + be) = acc;
  }
  return out;
}

inline VectorXd equilibrium_residual(const SystemModel& m, const SigmaPoint& q, const VectorXd& p) {
  if (p.size() != m.n_g()) fail(ErrorCode::OutOfRange, m.name + ": momentum has the wrong dimension");
  return equilibrium_residual(geometry_at(m, q), m.group, p);
}

namespace detail {

// Orthonormal basis of ker chi_j at q.
inline DenseMatrix sigma_tangent_basis(const SystemModel& m, const VectorXd& q) {
  const Eigen::JacobiSVD<DenseMatrix> svd(m.chi_jacobian(q), Eigen::ComputeFullV);
  return svd.matrixV().rightCols(m.n_p - m.n_g());
}

// Return to the gauge surface along chi^T after a tangent step.
inline VectorXd retract(const SystemModel& m, VectorXd q) {
  for (int k = 0; k < 20; ++k) {
    const VectorXd chi = m.chi(q);
    if (chi.norm() <= 1e-14 * std::max(1.0, q.norm())) break;
    const DenseMatrix J = m.chi_jacobian(q);
    q -= J.transpose() * solve_linear(DenseMatrix(J * J.transpose()), chi);
  }
  return q;
}

}  // namespace detail

/// Gauss-Newton on the stacked residual over (tangent displacement of Q*, p); p is held at p0
/// when fix_momentum is set.
inline EquilibriumResult solve_equilibrium(const EquilibriumProblem& prob) {
  const SystemModel& m = prob.model;
  const int n = m.n_p, ng = m.n_g(), nt = n - ng;
  if (!(prob.tol > 0.0)) fail(ErrorCode::OutOfRange, "tol must be positive");
  if (prob.max_iter < 1) fail(ErrorCode::OutOfRange, "max_iter must be positive");
  if (prob.p0.size() != ng) fail(ErrorCode::OutOfRange, m.name + ": momentum guess has the wrong dimension");
  SigmaPoint q{prob.q_star0};
  require_sigma(m, q);
  VectorXd p = prob.p0;
  VectorXd r = equilibrium_residual(m, q, p);
  EquilibriumResult res{q, p, r.norm(), 0};
  if (res.residual_norm <= prob.tol) return res;

  const int nz = nt + (prob.fix_momentum ? 0 : ng);
  const double step = 1e-6;
  for (int it = 1; it <= prob.max_iter; ++it) {
    const DenseMatrix T = detail::sigma_tangent_basis(m, q.q_star);
    const auto eval = [&](const VectorXd& z) {
      const SigmaPoint qz{detail::retract(m, q.q_star + T * z.head(nt))};
      const VectorXd pz = prob.fix_momentum ? p : VectorXd(p + z.tail(ng));
      return equilibrium_residual(m, qz, pz);
    };
    DenseMatrix J(n + ng, nz);
    for (int j = 0; j < nz; ++j) {
      VectorXd e = VectorXd::Zero(nz);
      e(j) = step;
      J.col(j) = (eval(e) - eval(-e)) / (2 * step);
    }
    const Eigen::JacobiSVD<DenseMatrix> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd sv = svd.singularValues();
    if (sv.size() < nz || !(sv(nz - 1) > 1e-10 * std::max(1.0, sv(0))))
      fail(ErrorCode::RankDeficient, m.name + ": equilibrium Jacobian has rank below " + std::to_string(nz) +
                                         " (smallest singular value " + std::to_string(sv.size() ? sv(sv.size() - 1) : 0.0) + ")");
    const VectorXd dz = -svd.solve(r);
    q = SigmaPoint{detail::retract(m, q.q_star + T * dz.head(nt))};
    if (!prob.fix_momentum) p += dz.tail(ng);
    require_sigma(m, q);
    r = equilibrium_residual(m, q, p);
    res = {q, p, r.norm(), it};
    if (res.residual_norm <= prob.tol) return res;
  }
  fail(ErrorCode::NoConvergence, m.name + ": equilibrium residual " + std::to_string(res.residual_norm) + " after " +
                                     std::to_string(prob.max_iter) + " iterations");
}

}  // namespace lpr
