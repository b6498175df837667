#pragma once

// Principal-bundle geometry at a point of the gauge surface chi(Q) = 0.
//
// Index layout of the three-index arrays (t[i](j, k)):
//   dG[C](A, B)            = dG_AB / dQ^C
//   dK[D](A, mu)           = dK^A_mu / dQ^D
//   chi_hess[mu](C, B)     = d2 chi^mu / dQ^C dQ^B
//   F_curv[alpha](E, P)    curvature of the mechanical connection, pulled back to the surface
//   Gamma_H[D](A, B)       horizontal Christoffel symbols
//   D_gamma_inv[S](k, s)   gauge-covariant derivative of gamma^{ks}
//   C_horiz[A](C, D), C_vert[alpha](C, D)   structure functions of the (H, L) frame
// Derivatives along the surface use d*_E = (P_perp)^D_E d_D on the ambient extension.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lpr/error.hpp"
#include "lpr/lie_group.hpp"
#include "lpr/numerics/diff.hpp"
#include "lpr/numerics/linalg.hpp"
#include "lpr/numerics/newton.hpp"
#include "lpr/system_model.hpp"

namespace lpr {

struct SigmaPoint {
  VectorXd q_star;
};

/// Projector data built from (G, K, dchi) at one ambient point.
template <class T>
struct BundleFrame {
  Mat<T> G, G_inv, K, chi_jac;
  Mat<T> gamma, gamma_inv, Phi, Phi_inv, Lambda, N, chi_T, P_perp, A_conn, Pi, G_H;
};

template <class T>
BundleFrame<T> bundle_frame(const Mat<T>& G, const Mat<T>& K, const Mat<T>& chi_jac) {
  const Eigen::Index n = G.rows(), g = K.cols();
  BundleFrame<T> f;
  f.G = G;
  f.K = K;
  f.chi_jac = chi_jac;
  if (K.rows() != n || chi_jac.rows() != g || chi_jac.cols() != n)
    fail(ErrorCode::ModelInvalid, "inconsistent metric/Killing/gauge dimensions");
  f.G_inv = inverse<T>(G);
  f.Phi = chi_jac * K;
  try {
    f.Phi_inv = inverse<T>(f.Phi);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularMatrix) throw;
    fail(ErrorCode::SingularFP, "Faddeev-Popov matrix is singular (gauge not transversal to the orbit)");
  }
  f.gamma = K.transpose() * G * K;
  try {
    f.gamma_inv = inverse<T>(f.gamma);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularMatrix) throw;
    fail(ErrorCode::SingularOrbitMetric, "orbit metric gamma is singular (action not free here)");
  }
  const Mat<T> I = Mat<T>::Identity(n, n);
  f.Lambda = f.Phi_inv * chi_jac;
  f.N = I - K * f.Lambda;
  f.chi_T = f.G_inv * chi_jac.transpose() * f.gamma;
  f.P_perp = I - f.chi_T * solve_linear<T>(Mat<T>(chi_jac * f.chi_T), chi_jac);
  f.A_conn = f.gamma_inv * K.transpose() * G;
  f.Pi = I - K * f.A_conn;
  f.G_H = f.Pi.transpose() * G * f.Pi;
  return f;
}

inline BundleFrame<double> bundle_frame_at(const SystemModel& m, const VectorXd& q) {
  return bundle_frame<double>(m.G(q), m.K(q), m.chi_jacobian(q));
}

namespace detail {

inline DenseMatrix derivative_part(const Mat<Dual1>& m) {
  DenseMatrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out(i, j) = m(i, j).d;
  return out;
}

// dchi/dQ as a dual matrix carrying its derivative along direction dir.
inline Mat<Dual1> chi_jacobian_seeded(const SystemModel& m, const VectorXd& q, Eigen::Index dir) {
  const Eigen::Index n = q.size();
  Mat<Dual1> J(m.n_g(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec<Dual2> x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = Dual2(Dual1(q(i), i == dir ? 1.0 : 0.0), Dual1(i == j ? 1.0 : 0.0, 0.0));
    const Vec<Dual2> y = guarded_call(m.gauge.f2, x);
    for (Eigen::Index r = 0; r < y.size(); ++r) J(r, j) = Dual1(y(r).d.v, y(r).d.d);
  }
  return J;
}

struct FramePartials {
  std::vector<DenseMatrix> A_conn, G_H, gamma_inv;  ///< ambient partials, one slice per coordinate
};

inline FramePartials frame_partials(const SystemModel& m, const VectorXd& q) {
  const Eigen::Index n = q.size();
  FramePartials out;
  const bool dual = m.diff.is_dual() && m.metric.has<Dual1>() && m.killing.has<Dual1>() && m.gauge.has<Dual2>();
  if (dual) {
    for (Eigen::Index d = 0; d < n; ++d) {
      const Vec<Dual1> x = seed(q, d);
      const BundleFrame<Dual1> f =
          bundle_frame<Dual1>(guarded_call(m.metric.f1, x), guarded_call(m.killing.f1, x), chi_jacobian_seeded(m, q, d));
      out.A_conn.push_back(derivative_part(f.A_conn));
      out.G_H.push_back(derivative_part(f.G_H));
      out.gamma_inv.push_back(derivative_part(f.gamma_inv));
    }
    return out;
  }
  const double h = std::max(m.diff.is_dual() ? 1e-6 : m.diff.step, 1e-4);
  for (Eigen::Index d = 0; d < n; ++d) {
    const double hd = probe_step(h, q(d));
    VectorXd qp = q, qm = q;
    qp(d) += hd;
    qm(d) -= hd;
    const BundleFrame<double> fp = bundle_frame_at(m, qp), fm = bundle_frame_at(m, qm);
    out.A_conn.push_back((fp.A_conn - fm.A_conn) / (2.0 * hd));
    out.G_H.push_back((fp.G_H - fm.G_H) / (2.0 * hd));
    out.gamma_inv.push_back((fp.gamma_inv - fm.gamma_inv) / (2.0 * hd));
  }
  return out;
}

inline std::vector<DenseMatrix> along_sigma(const std::vector<DenseMatrix>& partials, const DenseMatrix& P_perp) {
  std::vector<DenseMatrix> out(partials.size(), DenseMatrix::Zero(partials[0].rows(), partials[0].cols()));
  for (std::size_t e = 0; e < partials.size(); ++e)
    for (std::size_t d = 0; d < partials.size(); ++d)
      out[e] += P_perp(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(e)) * partials[d];
  return out;
}

}  // namespace detail

struct GeometryCache {
  VectorXd q_star;
  DenseMatrix G, G_inv;
  Tensor3 dG;
  DenseMatrix K;
  Tensor3 dK;
  DenseMatrix chi_jac;
  Tensor3 chi_hess;
  DenseMatrix gamma, gamma_inv, Phi, Phi_inv, Lambda, N, P_perp, chi_T, Pi, G_H, A_conn;
  Tensor3 dA_star;         ///< [E](alpha, P) = d*_E A^alpha_P
  Tensor3 dGH_star;        ///< [E](M, A) = d*_E G^H_MA
  Tensor3 dgamma_inv_star; ///< [S](k, s) = d*_S gamma^{ks}
  Tensor3 F_curv, Gamma_H, D_gamma_inv, C_horiz, C_vert;
  VectorXd gradV;

  int n_p() const { return static_cast<int>(q_star.size()); }
  int n_g() const { return static_cast<int>(K.cols()); }
};

/// Residual below which a point counts as lying on the gauge surface.
inline constexpr double kSigmaTol = 1e-9;

inline void require_sigma(const SystemModel& m, const SigmaPoint& p) {
  m.require_domain(p.q_star);
  const double r = m.chi(p.q_star).norm();
  if (!(r <= kSigmaTol))
    fail(ErrorCode::DomainViolation, m.name + ": point is not on the gauge surface (|chi| = " + std::to_string(r) + ")");
  if (!m.on_section_branch(p.q_star)) fail(ErrorCode::DomainViolation, m.name + ": point is off the section branch");
}

/// Decompose Q = F(Q*, a) with chi(Q*) = 0 by Newton on b = a^-1.
inline std::pair<SigmaPoint, GroupPoint> project_to_sigma(const SystemModel& m, const VectorXd& q) {
  if (q.size() != m.n_p || !all_finite(q)) fail(ErrorCode::DomainViolation, m.name + ": malformed point");
  const GroupChart& g = m.group;
  VectorXd b0 = g.identity();
  if (m.fibre_guess) b0 = g.inverse<double>(g.wrap<double>(m.fibre_guess(q)));
  const Residual res = [&](const VectorXd& b) { return m.chi(m.act(q, b)); };
  const ResidualJacobian jac = [&](const VectorXd& b) {
    return DenseMatrix(m.chi_jacobian(m.act(q, b)) * m.action_jacobian_a(q, b));
  };
  VectorXd b;
  try {
    b = newton_solve(res, jac, b0, 1e-12, 50).x;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularMatrix)
      fail(ErrorCode::SingularFP, m.name + ": gauge condition degenerate along the orbit");
    if (e.code() == ErrorCode::ChartDomainExceeded)
      fail(ErrorCode::NoConvergence, m.name + ": gauge solve left the group chart");
    throw;
  }
  b = g.wrap<double>(b);
  SigmaPoint p{m.act(q, b)};
  bundle_frame_at(m, p.q_star);  // transversality and freeness at Q*
  if (!m.in_domain(p.q_star) || !m.in_domain(q)) fail(ErrorCode::DomainViolation, m.name + ": point outside the model domain");
  if (!m.on_section_branch(p.q_star))
    fail(ErrorCode::DomainViolation, m.name + ": gauge solve landed on the wrong branch of chi = 0");
  GroupPoint a{g.inverse<double>(b)};
  const double back = (m.act(p.q_star, a.a) - q).norm();
  if (!(back <= 1e-10 * std::max(1.0, q.norm())))
    fail(ErrorCode::NoConvergence, m.name + ": decomposition does not reproduce Q (error " + std::to_string(back) + ")");
  return {p, a};
}

inline GeometryCache geometry_at(const SystemModel& m, const SigmaPoint& p) {
  require_sigma(m, p);
  const VectorXd& q = p.q_star;
  const BundleFrame<double> f = bundle_frame_at(m, q);
  GeometryCache c;
  c.q_star = q;
  c.G = f.G;
  c.G_inv = f.G_inv;
  c.K = f.K;
  c.chi_jac = f.chi_jac;
  c.gamma = f.gamma;
  c.gamma_inv = f.gamma_inv;
  c.Phi = f.Phi;
  c.Phi_inv = f.Phi_inv;
  c.Lambda = f.Lambda;
  c.N = f.N;
  c.P_perp = f.P_perp;
  c.chi_T = f.chi_T;
  c.Pi = f.Pi;
  c.G_H = f.G_H;
  c.A_conn = f.A_conn;
  c.dG = matrix_derivatives(m.metric, q, m.diff);
  c.dK = matrix_derivatives(m.killing, q, m.diff);
  c.chi_hess = hessian(m.gauge, q, m.diff);
  c.gradV = gradient(m.potential, q, m.diff);

  const detail::FramePartials fp = detail::frame_partials(m, q);
  c.dA_star = detail::along_sigma(fp.A_conn, c.P_perp);
  c.dGH_star = detail::along_sigma(fp.G_H, c.P_perp);
  c.dgamma_inv_star = detail::along_sigma(fp.gamma_inv, c.P_perp);

  const int n = c.n_p(), ng = c.n_g();
  const GroupChart& g = m.group;
  auto ei = [](int i) { return static_cast<std::size_t>(i); };

  c.F_curv = zero_tensor(ng, n, n);
  for (int al = 0; al < ng; ++al)
    for (int e = 0; e < n; ++e)
      for (int pp = 0; pp < n; ++pp) {
        double v = c.dA_star[ei(e)](al, pp) - c.dA_star[ei(pp)](al, e);
        for (int nu = 0; nu < ng; ++nu)
          for (int si = 0; si < ng; ++si) v += g.c(al, nu, si) * c.A_conn(nu, e) * c.A_conn(si, pp);
        c.F_curv[ei(al)](e, pp) = v;
      }
  // Keep only the part seen by pairs of vectors tangent to the surface.
  for (auto& slice : c.F_curv) slice = (c.P_perp.transpose() * slice * c.P_perp).eval();

  c.C_horiz = zero_tensor(n, n, n);
  for (int a = 0; a < n; ++a)
    for (int cc = 0; cc < n; ++cc)
      for (int d = 0; d < n; ++d) {
        double v = 0.0;
        for (int ga = 0; ga < ng; ++ga) v += c.Lambda(ga, cc) * c.dK[ei(d)](a, ga) - c.Lambda(ga, d) * c.dK[ei(cc)](a, ga);
        c.C_horiz[ei(a)](cc, d) = v;
      }
  c.C_vert = zero_tensor(ng, n, n);
  for (int al = 0; al < ng; ++al) c.C_vert[ei(al)] = -(c.N.transpose() * c.F_curv[ei(al)] * c.N);

  c.Gamma_H = zero_tensor(n, n, n);
  {
    // Gamma^E lowered with N: low[E](A, B) = N^M_E * 1/2 (G^H_MA,B + G^H_MB,A - G^H_AB,M)
    Tensor3 low = zero_tensor(n, n, n);
    for (int mm = 0; mm < n; ++mm)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double s =
              0.5 * (c.dGH_star[ei(b)](mm, a) + c.dGH_star[ei(a)](mm, b) - c.dGH_star[ei(mm)](a, b));
          for (int e = 0; e < n; ++e) low[ei(e)](a, b) += c.N(mm, e) * s;
        }
    for (int d = 0; d < n; ++d)
      for (int e = 0; e < n; ++e) c.Gamma_H[ei(d)] += c.G_inv(d, e) * low[ei(e)];
  }

  c.D_gamma_inv = zero_tensor(n, ng, ng);
  for (int s = 0; s < n; ++s) {
    DenseMatrix D = c.dgamma_inv_star[ei(s)];
    for (int ka = 0; ka < ng; ++ka)
      for (int si = 0; si < ng; ++si)
        for (int nu = 0; nu < ng; ++nu)
          for (int mu = 0; mu < ng; ++mu)
            D(ka, si) += c.A_conn(nu, s) * (g.c(ka, nu, mu) * c.gamma_inv(mu, si) + g.c(si, nu, mu) * c.gamma_inv(ka, mu));
    c.D_gamma_inv[ei(s)] = D;
  }
  return c;
}

inline Tensor3 curvature_at(const SystemModel& m, const SigmaPoint& p) { return geometry_at(m, p).F_curv; }

inline std::pair<Tensor3, Tensor3> nonholonomic_constants(const SystemModel& m, const SigmaPoint& p) {
  GeometryCache c = geometry_at(m, p);
  return {std::move(c.C_horiz), std::move(c.C_vert)};
}

inline Tensor3 horizontal_christoffel(const SystemModel& m, const SigmaPoint& p) { return geometry_at(m, p).Gamma_H; }

inline Tensor3 gauge_covariant_dgamma(const SystemModel& m, const SigmaPoint& p) {
  return geometry_at(m, p).D_gamma_inv;
}

struct MetricBlocks {
  DenseMatrix G_tilde;      ///< (n + g) square, coordinates (Q*, a)
  DenseMatrix G_tilde_inv;  ///< pseudoinverse
};

inline MetricBlocks metric_blocks(const GeometryCache& c, const GroupChart& g, const GroupPoint& a) {
  const int n = c.n_p(), ng = c.n_g();
  const auto [ubar, vbar] = g.left_frame<double>(a.a);
  DenseMatrix C(n, n + ng);
  C << c.P_perp, c.K * ubar;
  DenseMatrix B(n + ng, n);
  B << c.N, vbar * c.Lambda;
  return {C.transpose() * c.G * C, B * c.G_inv * B.transpose()};
}

inline MetricBlocks metric_blocks(const SystemModel& m, const SigmaPoint& p, const GroupPoint& a) {
  return metric_blocks(geometry_at(m, p), m.group, a);
}

/// block-diag(P_perp, I): the exact value of G_tilde_inv * G_tilde.
inline DenseMatrix expected_block_product(const GeometryCache& c) {
  const int n = c.n_p(), ng = c.n_g();
  DenseMatrix out = DenseMatrix::Zero(n + ng, n + ng);
  out.topLeftCorner(n, n) = c.P_perp;
  out.bottomRightCorner(ng, ng).setIdentity();
  return out;
}

/// Metric in the (H, L) frame at fibre point a: the congruence of G_tilde by
/// the frame matrix with H column (N e_A; -v rhobar A N e_A) and L column (0; v e_alpha).
inline DenseMatrix frame_metric(const GeometryCache& c, const GroupChart& g, const GroupPoint& a) {
  const int n = c.n_p(), ng = c.n_g();
  const DenseMatrix v = g.right_frame<double>(a.a).second;
  const DenseMatrix rb = g.rho_bar<double>(a.a);
  DenseMatrix basis = DenseMatrix::Zero(n + ng, n + ng);
  basis.topLeftCorner(n, n) = c.N;
  basis.bottomLeftCorner(ng, n) = -v * rb * c.A_conn * c.N;
  basis.bottomRightCorner(ng, ng) = v;
  const DenseMatrix Gt = metric_blocks(c, g, a).G_tilde;
  return basis.transpose() * Gt * basis;
}

/// Seeded points of the gauge surface: model samples projected along their orbits.
inline std::vector<SigmaPoint> sample_sigma(const SystemModel& m, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SigmaPoint> out;
  for (int i = 0; i < count; ++i) out.push_back(project_to_sigma(m, m.sampler(rng)).first);
  return out;
}

/// Largest violation among the algebraic identities of a cache: projector idempotence,
/// chi N = 0, Lambda K = I, N K = 0, Pi relations, G_H K = 0, A K = I, antisymmetry of F.
inline double cache_invariant_residual(const GeometryCache& c) {
  const int g = c.n_g();
  const DenseMatrix Ig = DenseMatrix::Identity(g, g);
  const auto mx = [](const DenseMatrix& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; };
  double r = std::max({mx(c.N * c.N - c.N), mx(c.P_perp * c.P_perp - c.P_perp), mx(c.chi_jac * c.N),
                       mx(c.Lambda * c.K - Ig), mx(c.N * c.K), mx(c.Pi * c.Pi - c.Pi), mx(c.Pi * c.K),
                       mx(c.Pi * c.N - c.Pi), mx(c.N * c.Pi - c.N), mx(c.G_H * c.K), mx(c.A_conn * c.K - Ig),
                       mx(c.A_conn * c.Pi)});
  for (const DenseMatrix& f : c.F_curv) r = std::max(r, mx(f + f.transpose()));
  return r;
}

}  // namespace lpr
