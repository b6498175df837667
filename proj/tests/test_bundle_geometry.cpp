#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lpr/bundle_geometry.hpp"
#include "lpr/system_model.hpp"

using namespace lpr;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

double max_abs(const DenseMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }
double max_abs(const Tensor3& t) {
  double out = 0.0;
  for (const auto& s : t) out = std::max(out, max_abs(s));
  return out;
}

SystemModel twisted(double twist, VectorXd inertia = VectorXd::Ones(3)) {
  TwistedSu2Params par;
  par.connection = linear_twist_connection(twist);
  par.inertia = std::move(inertia);
  return make_twisted_su2(par);
}

std::vector<SystemModel> builtins() {
  return {make_planar_rotor(), make_hopf(), twisted(0.0), twisted(1.0, vec({1.0, 2.0, 3.0}))};
}

std::vector<SigmaPoint> sigma_samples(const SystemModel& m, int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<SigmaPoint> out;
  for (int i = 0; i < n; ++i) out.push_back(project_to_sigma(m, m.sampler(rng)).first);
  return out;
}

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an lpr::Error";
  return ErrorCode::ModelInvalid;
}

// Along-surface derivative of an ambient matrix quantity by central differences.
template <class Sel>
std::vector<DenseMatrix> fd_along_sigma(const SystemModel& m, const VectorXd& q, const DenseMatrix& P, Sel sel,
                                        double h = 1e-5) {
  const int n = m.n_p;
  std::vector<DenseMatrix> partial;
  for (int d = 0; d < n; ++d) {
    VectorXd qp = q, qm = q;
    qp(d) += h;
    qm(d) -= h;
    partial.push_back((sel(bundle_frame_at(m, qp)) - sel(bundle_frame_at(m, qm))) / (2 * h));
  }
  std::vector<DenseMatrix> out(n, DenseMatrix::Zero(partial[0].rows(), partial[0].cols()));
  for (int e = 0; e < n; ++e)
    for (int d = 0; d < n; ++d) out[e] += P(d, e) * partial[d];
  return out;
}

}  // namespace

TEST(ProjectToSigma, PointAlreadyOnSection) {
  const auto [p, a] = project_to_sigma(make_planar_rotor(), vec({1.5, 0}));
  EXPECT_LE((p.q_star - vec({1.5, 0})).norm(), 1e-15);
  EXPECT_EQ(a.a(0), 0.0);
}

TEST(ProjectToSigma, QuarterTurn) {
  const auto [p, a] = project_to_sigma(make_planar_rotor(), vec({0, 2}));
  EXPECT_LE((p.q_star - vec({2, 0})).norm(), 1e-14);
  EXPECT_NEAR(a.a(0), std::numbers::pi / 2, 1e-14);
}

TEST(ProjectToSigma, FixedPointIsSingular) {
  EXPECT_EQ(code_of([] { project_to_sigma(make_planar_rotor(), vec({0, 0})); }), ErrorCode::SingularFP);
}

TEST(ProjectToSigma, ExcludedNeighbourhoodOfOrigin) {
  EXPECT_EQ(code_of([] { project_to_sigma(make_planar_rotor(), vec({0.01, 0.0})); }), ErrorCode::DomainViolation);
}

TEST(ProjectToSigma, HopfSectionNeedsNonzeroFirstFactor) {
  EXPECT_EQ(code_of([] { project_to_sigma(make_hopf(), vec({0, 0, 1, 0.5})); }), ErrorCode::SingularFP);
}

TEST(ProjectToSigma, RoundTripOnRandomPoints) {
  for (const SystemModel& m : builtins()) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
      const VectorXd q = m.sampler(rng);
      const auto [p, a] = project_to_sigma(m, q);
      EXPECT_LE(m.chi(p.q_star).norm(), 1e-10) << m.name;
      EXPECT_LE((m.act(p.q_star, a.a) - q).norm(), 1e-10) << m.name;
    }
  }
}

TEST(GeometryAt, PlanarRotorByHand) {
  const GeometryCache c = geometry_at(make_planar_rotor(), SigmaPoint{vec({2, 0})});
  const DenseMatrix e00 = (DenseMatrix(2, 2) << 1, 0, 0, 0).finished();
  EXPECT_NEAR(c.gamma(0, 0), 4.0, 1e-15);
  EXPECT_LE(max_abs(c.A_conn - DenseMatrix(vec({0, 0.5}).transpose())), 1e-15);
  EXPECT_LE(max_abs(c.N - e00), 1e-15);
  EXPECT_LE(max_abs(c.P_perp - e00), 1e-15);
  EXPECT_LE(max_abs(c.Pi - e00), 1e-15);
  EXPECT_LE(max_abs(c.G_H - e00), 1e-15);
}

TEST(GeometryAt, HopfByHand) {
  const GeometryCache c = geometry_at(make_hopf(), SigmaPoint{vec({1, 0, 0, 0})});
  EXPECT_NEAR(c.gamma(0, 0), 1.0, 1e-15);
  EXPECT_LE(max_abs(c.A_conn - DenseMatrix(vec({0, 1, 0, 0}).transpose())), 1e-15);
}

TEST(GeometryAt, RejectsPointsOffTheSection) {
  EXPECT_EQ(code_of([] { geometry_at(make_planar_rotor(), SigmaPoint{vec({2, 0.1})}); }), ErrorCode::DomainViolation);
  EXPECT_EQ(code_of([] { geometry_at(make_planar_rotor(), SigmaPoint{vec({-2, 0})}); }), ErrorCode::DomainViolation);
}

TEST(GeometryAt, CacheInvariantsAtRandomSectionPoints) {
  for (const SystemModel& m : builtins()) {
    for (const SigmaPoint& p : sigma_samples(m, 100, 11)) {
      const GeometryCache c = geometry_at(m, p);
      const int n = c.n_p(), g = c.n_g();
      const DenseMatrix I = DenseMatrix::Identity(n, n);
      EXPECT_LE(max_abs(c.N * c.N - c.N), 1e-10);
      EXPECT_LE(max_abs(c.P_perp * c.P_perp - c.P_perp), 1e-10);
      EXPECT_LE(max_abs(c.chi_jac * c.N), 1e-10);
      EXPECT_LE(max_abs(c.Lambda * c.K - DenseMatrix::Identity(g, g)), 1e-10);
      EXPECT_LE(max_abs(c.N * c.K), 1e-10);
      EXPECT_LE(max_abs(c.Pi * c.N - c.Pi), 1e-10);
      EXPECT_LE(max_abs(c.N * c.Pi - c.N), 1e-10);
      EXPECT_LE(max_abs(c.G_H * c.K), 1e-10);
      EXPECT_LE(max_abs(c.A_conn * c.K - DenseMatrix::Identity(g, g)), 1e-10);
      for (int al = 0; al < g; ++al) {
        EXPECT_LE(max_abs(c.F_curv[al] + c.F_curv[al].transpose()), 1e-10);
        EXPECT_LE(max_abs(c.C_vert[al] + c.C_vert[al].transpose()), 1e-10);
      }
      for (int a = 0; a < n; ++a) {
        EXPECT_EQ(max_abs(c.C_horiz[a] + c.C_horiz[a].transpose()), 0.0);
        EXPECT_LE(max_abs(c.Gamma_H[a] - c.Gamma_H[a].transpose()), 1e-10);
      }
      EXPECT_LE(max_abs(c.P_perp * c.N - c.N), 1e-10);
      (void)I;
    }
  }
}

TEST(MetricBlocks, PlanarRotorProductIsBlockDiagonal) {
  const SystemModel m = make_planar_rotor();
  const MetricBlocks b = metric_blocks(m, SigmaPoint{vec({2, 0})}, GroupPoint{vec({0.7})});
  const DenseMatrix expect = (DenseMatrix(3, 3) << 1, 0, 0, 0, 0, 0, 0, 0, 1).finished();
  EXPECT_LE(max_abs(b.G_tilde_inv * b.G_tilde - expect), 1e-12);
}

TEST(MetricBlocks, GroupBlockAtIdentityIsOrbitMetric) {
  for (const SystemModel& m : builtins()) {
    const SigmaPoint p = sigma_samples(m, 1, 3)[0];
    const GeometryCache c = geometry_at(m, p);
    const MetricBlocks b = metric_blocks(c, m.group, GroupPoint{m.group.identity()});
    EXPECT_LE(max_abs(b.G_tilde.bottomRightCorner(c.n_g(), c.n_g()) - c.gamma), 1e-12) << m.name;
  }
}

TEST(MetricBlocks, ProductIdentityAtRandomFibrePoints) {
  for (const SystemModel& m : builtins()) {
    std::mt19937_64 rng(5);
    for (const SigmaPoint& p : sigma_samples(m, 50, 13)) {
      const GeometryCache c = geometry_at(m, p);
      const GroupPoint a{sample_group(m.group, rng)};
      const MetricBlocks b = metric_blocks(c, m.group, a);
      EXPECT_LE(max_abs(b.G_tilde_inv * b.G_tilde - expected_block_product(c)), 1e-10) << m.name;
    }
  }
}

TEST(MetricBlocks, HorizontalLiftFrameDiagonalisesTheMetric) {
  for (const SystemModel& m : builtins()) {
    std::mt19937_64 rng(8);
    for (const SigmaPoint& p : sigma_samples(m, 30, 17)) {
      const GeometryCache c = geometry_at(m, p);
      const int n = c.n_p(), g = c.n_g();
      for (const VectorXd& av : {m.group.identity(), sample_group(m.group, rng)}) {
        const DenseMatrix rho = m.group.rho<double>(av);
        DenseMatrix expect = DenseMatrix::Zero(n + g, n + g);
        expect.topLeftCorner(n, n) = c.G_H;
        expect.bottomRightCorner(g, g) = rho.transpose() * c.gamma * rho;
        EXPECT_LE(max_abs(frame_metric(c, m.group, GroupPoint{av}) - expect), 1e-10) << m.name;
      }
    }
  }
}

TEST(Curvature, PlanarRotorIsFlat) {
  EXPECT_LE(max_abs(curvature_at(make_planar_rotor(), SigmaPoint{vec({2, 0})})), 1e-14);
}

TEST(Curvature, HopfHorizontalComponents) {
  const SystemModel m = make_hopf();
  const GeometryCache c = geometry_at(m, SigmaPoint{vec({1, 0, 0, 0})});
  const DenseMatrix& F = c.F_curv[0];
  EXPECT_NEAR(F(2, 3), 2.0, 1e-12);
  EXPECT_NEAR(F(3, 2), -2.0, 1e-12);
  // Restricted to horizontal directions only the (x2, y2) pair survives.
  const DenseMatrix Fh = c.N.transpose() * F * c.N;
  DenseMatrix expect = DenseMatrix::Zero(4, 4);
  expect(2, 3) = 2.0;
  expect(3, 2) = -2.0;
  EXPECT_LE(max_abs(Fh - expect), 1e-12);
}

TEST(Curvature, HopfMatchesFiniteDifferenceCurl) {
  const SystemModel m = make_hopf();
  for (const SigmaPoint& p : sigma_samples(m, 10, 21)) {
    const GeometryCache c = geometry_at(m, p);
    const auto dA = fd_along_sigma(m, p.q_star, c.P_perp, [](const BundleFrame<double>& f) { return f.A_conn; });
    DenseMatrix curl(4, 4);
    for (int e = 0; e < 4; ++e)
      for (int q = 0; q < 4; ++q) curl(e, q) = dA[e](0, q) - dA[q](0, e);
    EXPECT_LE(max_abs(c.F_curv[0] - c.P_perp.transpose() * curl * c.P_perp), 1e-8);
  }
}

TEST(Curvature, TwistedSu2) {
  EXPECT_LE(max_abs(curvature_at(twisted(0.0), SigmaPoint{vec({0.4, -1.1, 0, 0, 0})})), 1e-14);
  const Tensor3 F = curvature_at(twisted(1.0), SigmaPoint{vec({0.4, -1.1, 0, 0, 0})});
  EXPECT_NEAR(F[0](0, 1), -1.0, 1e-12);
  EXPECT_NEAR(F[0](1, 0), 1.0, 1e-12);
}

TEST(NonholonomicConstants, Examples) {
  EXPECT_LE(max_abs(nonholonomic_constants(make_planar_rotor(), SigmaPoint{vec({2, 0})}).second), 1e-14);
  const auto [Ch, Cv] = nonholonomic_constants(make_hopf(), SigmaPoint{vec({1, 0, 0, 0})});
  EXPECT_NEAR(Cv[0](2, 3), -2.0, 1e-12);
  EXPECT_NEAR(Cv[0](3, 2), 2.0, 1e-12);
  for (const auto& s : Ch) EXPECT_EQ(max_abs(s + s.transpose()), 0.0);
}

TEST(HorizontalChristoffel, VanishesForConstantHorizontalMetric) {
  EXPECT_LE(max_abs(horizontal_christoffel(twisted(0.0), SigmaPoint{vec({0.3, 0.2, 0, 0, 0})})), 1e-14);
  EXPECT_LE(max_abs(horizontal_christoffel(make_planar_rotor(), SigmaPoint{vec({2, 0})})), 1e-14);
}

TEST(HorizontalChristoffel, MatchesFiniteDifferenceOracle) {
  for (const SystemModel& m : {make_hopf(), twisted(1.0, vec({1.0, 2.0, 3.0}))}) {
    for (const SigmaPoint& p : sigma_samples(m, 10, 31)) {
      const GeometryCache c = geometry_at(m, p);
      const int n = c.n_p();
      const auto dGH = fd_along_sigma(m, p.q_star, c.P_perp, [](const BundleFrame<double>& f) { return f.G_H; });
      for (int d = 0; d < n; ++d)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            double v = 0.0;
            for (int e = 0; e < n; ++e)
              for (int mm = 0; mm < n; ++mm)
                v += c.G_inv(d, e) * c.N(mm, e) * 0.5 * (dGH[b](mm, a) + dGH[a](mm, b) - dGH[mm](a, b));
            EXPECT_NEAR(c.Gamma_H[d](a, b), v, 1e-6) << m.name;
          }
    }
  }
}

TEST(GaugeCovariantDgamma, PlanarRotorByHand) {
  const Tensor3 D = gauge_covariant_dgamma(make_planar_rotor(), SigmaPoint{vec({2, 0})});
  EXPECT_NEAR(D[0](0, 0), -0.25, 1e-14);
  EXPECT_NEAR(D[1](0, 0), 0.0, 1e-14);
}

TEST(GaugeCovariantDgamma, BiInvariantFibreCancels) {
  const Tensor3 D = gauge_covariant_dgamma(twisted(1.0), SigmaPoint{vec({0.7, 0.9, 0, 0, 0})});
  EXPECT_LE(max_abs(D), 1e-14);
}

// Oracle: 1/2 N^S_E (d*_S gt - At^a_S L_a gt)_{ne} w^n w^e at a = e, with
// gt(Q*, a) = rho(a)^T gamma(Q*) rho(a), differentiated by finite differences.
TEST(GaugeCovariantDgamma, ReproducesVerticalMetricTerms) {
  for (const SystemModel& m : {make_hopf(), twisted(1.0), twisted(1.3, vec({1.0, 2.0, 3.5}))}) {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> nd;
    for (const SigmaPoint& p : sigma_samples(m, 10, 43)) {
      const GeometryCache c = geometry_at(m, p);
      const int n = c.n_p(), g = c.n_g();
      const auto dgam = fd_along_sigma(m, p.q_star, c.P_perp, [](const BundleFrame<double>& f) { return f.gamma; });
      const double h = 1e-5;
      std::vector<DenseMatrix> Lg;
      for (int al = 0; al < g; ++al) {
        VectorXd e = VectorXd::Zero(g);
        e(al) = h;
        const DenseMatrix rp = m.group.rho<double>(e), rm = m.group.rho<double>(-e);
        // v(e) = I, so L_alpha = d/da^alpha at the identity
        Lg.push_back((rp.transpose() * c.gamma * rp - rm.transpose() * c.gamma * rm) / (2 * h));
      }
      const VectorXd w = VectorXd::NullaryExpr(g, [&] { return nd(rng); });
      const VectorXd pm = c.gamma * w;
      for (int e = 0; e < n; ++e) {
        double oracle = 0.0, formula = 0.0;
        for (int s = 0; s < n; ++s) {
          double term = w.dot(dgam[s] * w);
          for (int al = 0; al < g; ++al) term -= c.A_conn(al, s) * w.dot(Lg[al] * w);
          oracle += 0.5 * c.N(s, e) * term;
          formula += -0.5 * c.N(s, e) * pm.dot(c.D_gamma_inv[s] * pm);
        }
        EXPECT_NEAR(formula, oracle, 1e-8) << m.name;
      }
    }
  }
}

TEST(CacheInvariants, ResidualHelperOnSeededSamples) {
  for (const SystemModel& m : {make_planar_rotor(), make_hopf(), make_twisted_su2()}) {
    const std::vector<SigmaPoint> pts = sample_sigma(m, 30, 5);
    ASSERT_EQ(pts.size(), 30u);
    for (const SigmaPoint& p : pts) EXPECT_LE(cache_invariant_residual(geometry_at(m, p)), 1e-10) << m.name;
  }
}

TEST(CacheInvariants, ResidualHelperSeesABrokenProjector) {
  const SystemModel m = make_hopf();
  GeometryCache c = geometry_at(m, sample_sigma(m, 1, 2).front());
  c.N(0, 0) += 1e-6;
  EXPECT_GT(cache_invariant_residual(c), 1e-7);
}
