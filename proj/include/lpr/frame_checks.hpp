#pragma once

// Finite-difference checks of the horizontal-lift frame (H_C, L_alpha) on the total space
// in (Q*, a) coordinates, and the cancellation of the group terms in the vertical equation.

#include <algorithm>
#include <cmath>

#include "lpr/bundle_geometry.hpp"
#include "lpr/numerics/dual.hpp"
#include "lpr/system_model.hpp"

namespace lpr {

namespace detail {

// Columns 0..n-1 are H_C, columns n..n+g-1 are L_alpha, as vectors in R^(n+g).
inline DenseMatrix lift_frame(const SystemModel& m, const VectorXd& x) {
  const int n = m.n_p, g = m.n_g();
  const VectorXd q = x.head(n), a = x.tail(g);
  const BundleFrame<double> f = bundle_frame_at(m, q);
  const DenseMatrix v = m.group.right_frame<double>(a).second;
  DenseMatrix out = DenseMatrix::Zero(n + g, n + g);
  out.topLeftCorner(n, n) = f.N;
  out.bottomLeftCorner(g, n) = -v * m.group.rho_bar<double>(a) * f.A_conn * f.N;
  out.bottomRightCorner(g, g) = v;
  return out;
}

// Derivative of frame column j along direction d, five-point central stencil.
inline VectorXd directional(const SystemModel& m, const VectorXd& x, const VectorXd& d, int j, double h) {
  const auto col = [&](double s) { return VectorXd(lift_frame(m, x + s * d).col(j)); };
  return (col(-2 * h) - 8.0 * col(-h) + 8.0 * col(h) - col(2 * h)) / (12.0 * h);
}

// [X_i, X_j] = D X_j . X_i - D X_i . X_j
inline VectorXd frame_bracket(const SystemModel& m, const VectorXd& x, int i, int j, double h) {
  const DenseMatrix F = lift_frame(m, x);
  return directional(m, x, F.col(i), j, h) - directional(m, x, F.col(j), i, h);
}

}  // namespace detail

struct CommutatorReport {
  double h = 0.0;
  double horizontal = 0.0;  ///< max |[H_C, H_D] - C^A_CD H_A - C^alpha_CD L_alpha|
  double mixed = 0.0;       ///< max |[H_C, L_alpha]|
  double vertical = 0.0;    ///< max |[L_alpha, L_beta] - c^gamma_ab L_gamma|
  double max() const { return std::max({horizontal, mixed, vertical}); }
};

/// Compare finite-difference brackets of the frame fields with the cached structure constants
/// at (Q*, a), Q* on the gauge surface.
inline CommutatorReport commutator_check(const SystemModel& m, const SigmaPoint& p, const GroupPoint& a, double h) {
  const GeometryCache c = geometry_at(m, p);
  const GroupChart& g = m.group;
  const int n = m.n_p, ng = m.n_g();
  VectorXd x(n + ng);
  x << p.q_star, a.a;
  const DenseMatrix F = detail::lift_frame(m, x);
  const DenseMatrix rb = g.rho_bar<double>(a.a);
  CommutatorReport rep;
  rep.h = h;
  for (int C = 0; C < n; ++C)
    for (int D = C + 1; D < n; ++D) {
      VectorXd expect = VectorXd::Zero(n + ng);
      for (int A = 0; A < n; ++A) expect += c.C_horiz[static_cast<std::size_t>(A)](C, D) * F.col(A);
      VectorXd cv(ng);
      for (int mu = 0; mu < ng; ++mu) cv(mu) = c.C_vert[static_cast<std::size_t>(mu)](C, D);
      expect += F.rightCols(ng) * (rb * cv);
      rep.horizontal = std::max(rep.horizontal, (detail::frame_bracket(m, x, C, D, h) - expect).cwiseAbs().maxCoeff());
    }
  for (int C = 0; C < n; ++C)
    for (int al = 0; al < ng; ++al)
      rep.mixed = std::max(rep.mixed, detail::frame_bracket(m, x, C, n + al, h).cwiseAbs().maxCoeff());
  for (int al = 0; al < ng; ++al)
    for (int be = al + 1; be < ng; ++be) {
      VectorXd expect = VectorXd::Zero(n + ng);
      for (int ga = 0; ga < ng; ++ga) expect += g.c(ga, al, be) * F.col(n + ga);
      rep.vertical =
          std::max(rep.vertical, (detail::frame_bracket(m, x, n + al, n + be, h) - expect).cwiseAbs().maxCoeff());
    }
  return rep;
}

struct CancellationReport {
  double residual = 0.0;  ///< max_alpha |group term + Lie-derivative term|
  double group_term = 0.0;  ///< max_alpha |c^mu_{nu alpha} gt_{mu b} w^b w^nu|
  double lie_term = 0.0;    ///< max_alpha |1/2 L_alpha(gt) w w|
};

/// Term-by-term evaluation of c^mu_{nu alpha} gt_{mu beta} w^beta w^nu + 1/2 L_alpha(gt)_{ks} w^k w^s
/// with gt(a) = rho^T gamma rho and L_alpha differentiated with dual numbers along v(a) e_alpha.
inline CancellationReport cancellation_check(const GroupChart& g, const DenseMatrix& gamma, const VectorXd& a,
                                             const VectorXd& w) {
  const int ng = g.dim;
  const DenseMatrix r = g.rho<double>(a);
  const DenseMatrix gt = r.transpose() * gamma * r;
  const DenseMatrix v = g.right_frame<double>(a).second;
  const Mat<Dual1> gamma_d = gamma.cast<Dual1>();
  CancellationReport rep;
  for (int al = 0; al < ng; ++al) {
    double group = 0.0;
    for (int mu = 0; mu < ng; ++mu)
      for (int nu = 0; nu < ng; ++nu) group += g.c(mu, nu, al) * (gt.row(mu) * w)(0) * w(nu);
    Vec<Dual1> ad(ng);
    for (int k = 0; k < ng; ++k) ad(k) = Dual1(a(k), v(k, al));
    const Mat<Dual1> rd = g.rho<Dual1>(ad);
    const Mat<Dual1> gtd = rd.transpose() * gamma_d * rd;
    double lie = 0.0;
    for (int k = 0; k < ng; ++k)
      for (int s = 0; s < ng; ++s) lie += 0.5 * gtd(k, s).d * w(k) * w(s);
    rep.group_term = std::max(rep.group_term, std::abs(group));
    rep.lie_term = std::max(rep.lie_term, std::abs(lie));
    rep.residual = std::max(rep.residual, std::abs(group + lie));
  }
  return rep;
}

}  // namespace lpr
