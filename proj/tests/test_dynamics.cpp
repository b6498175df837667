#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lpr/dynamics.hpp"

using namespace lpr;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

SystemModel anisotropic_twist() {
  TwistedSu2Params tw;
  tw.connection = linear_twist_connection(1.0);
  tw.inertia = vec({1.0, 2.0, 3.0});
  return make_twisted_su2(tw);
}

// one RK4 step of the full flow; negative h runs the time-reversed system
FullState flow(const SystemModel& m, const FullState& s, double h) {
  const int n = m.n_p;
  const StateDerivative rhs = [&](const VectorXd& y, double) {
    const auto [dq, ddq] = full_rhs(m, unpack_full(y, n));
    VectorXd out(2 * n);
    out << dq, ddq;
    return out;
  };
  const double sign = h < 0 ? -1.0 : 1.0;
  FullState out = unpack_full(rk4_step(rhs, pack(FullState{s.Q, sign * s.Qdot}), 0.0, std::abs(h)), n);
  out.Qdot *= sign;
  return out;
}

FullState random_full(const SystemModel& m, std::mt19937_64& rng, double speed = 1.0) {
  std::uniform_real_distribution<double> u(-speed, speed);
  FullState s{m.sampler(rng), VectorXd(m.n_p)};
  for (int i = 0; i < m.n_p; ++i) s.Qdot(i) = u(rng);
  return s;
}

double max_abs(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(FullRhs, FlatWithoutPotentialIsStraightLine) {
  SystemModel m = make_planar_rotor();
  m.potential = ScalarFamily::from([](const auto& q) { return 0.0 * q(0); });
  const auto [dq, ddq] = full_rhs(m, {vec({1.0, 0.5}), vec({0.3, -0.2})});
  EXPECT_EQ(dq, vec({0.3, -0.2}));
  EXPECT_LE(max_abs(ddq), 1e-15);
}

TEST(FullRhs, RotorRadialForce) {
  const SystemModel m = make_planar_rotor();
  const auto ddq = full_rhs(m, {vec({2, 0}), vec({0, 0})}).second;
  EXPECT_LE(max_abs(ddq - vec({-1, 0})), 1e-14);
}

TEST(FullRhs, HopfHarmonic) {
  const SystemModel m = make_hopf();
  const VectorXd Q = vec({0.7, -0.3, 0.2, 1.1});
  EXPECT_LE(max_abs(full_rhs(m, {Q, vec({0.1, 0.2, -0.4, 0.3})}).second + Q), 1e-14);
}

TEST(FullRhs, ChristoffelMatchesGeodesicOracle) {
  // twisted-su2 with V = 0: the energy is conserved and the rhs equals the Euler-Lagrange
  // expression from a dual-differentiated Lagrangian
  const SystemModel m = anisotropic_twist();
  std::mt19937_64 rng(8);
  const FullState s = random_full(m, rng);
  const auto L = [&](const VectorXd& q, const VectorXd& qd) { return 0.5 * qd.dot(m.G(q) * qd); };
  const double h = 1e-5;
  const int n = m.n_p;
  // d/dt dL/dqd - dL/dq = G qdd + (terms); check G qdd + w + grad V = 0 via central differences of L
  const VectorXd qdd = full_rhs(m, s).second;
  VectorXd resid = m.G(s.Q) * qdd;
  for (int d = 0; d < n; ++d) {
    VectorXd e = VectorXd::Unit(n, d) * h;
    const double dLdq = (L(s.Q + e, s.Qdot) - L(s.Q - e, s.Qdot)) / (2 * h);
    // (d/dt of G qd)_d minus G qdd along the flow equals dG[Qdot] qd
    const DenseMatrix dGv = (m.G(s.Q + h * s.Qdot) - m.G(s.Q - h * s.Qdot)) / (2 * h);
    resid(d) += (dGv * s.Qdot)(d) - dLdq;
  }
  resid += gradient(m.potential, s.Q, m.diff);
  EXPECT_LE(max_abs(resid), 1e-8);
}

TEST(FullRhs, RejectsOutsideDomain) {
  EXPECT_THROW(full_rhs(make_planar_rotor(), {vec({0.01, 0}), vec({0, 0})}), Error);
}

TEST(ToReduced, PureGroupMotion) {
  const SystemModel m = make_planar_rotor();
  const ReducedState r = to_reduced(m, {vec({0, 2}), vec({-2, 0})});
  EXPECT_LE(max_abs(r.q_star - vec({2, 0})), 1e-12);
  EXPECT_LE(max_abs(r.omega), 1e-12);
  EXPECT_NEAR(r.p(0), 4.0, 1e-12);
  EXPECT_NEAR(r.a(0), std::numbers::pi / 2, 1e-12);
}

TEST(ToReduced, RadialMotionIsHorizontal) {
  const SystemModel m = make_planar_rotor();
  const ReducedState r = to_reduced(m, {vec({2, 0}), vec({1, 0})});
  EXPECT_LE(max_abs(r.omega - vec({1, 0})), 1e-14);
  EXPECT_NEAR(r.p(0), 0.0, 1e-14);
  EXPECT_NEAR(r.a(0), 0.0, 1e-14);
}

TEST(ToReduced, FixedPointOnSigma) {
  const SystemModel m = make_hopf();
  // on Sigma (y1 = 0, x1 > 0); tangent means ydot1 = 0, horizontal then forces ydot2 = 0
  const VectorXd Q = vec({1.0, 0.0, 0.5, 0.0});
  const VectorXd Qdot = vec({0.3, 0.0, -0.2, 0.0});
  const ReducedState r = to_reduced(m, {Q, Qdot});
  EXPECT_LE(max_abs(r.a), 1e-14);
  EXPECT_LE(max_abs(r.p), 1e-12);
  EXPECT_LE(max_abs(r.omega - Qdot), 1e-12);
}

TEST(ToReduced, InvariantsHoldOnRandomStates) {
  for (const SystemModel& m : {make_planar_rotor(), make_hopf(), anisotropic_twist()}) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 50; ++i) {
      const ReducedState r = to_reduced(m, random_full(m, rng));
      const BundleFrame<double> f = bundle_frame_at(m, r.q_star);
      EXPECT_LE(max_abs(f.chi_jac * r.omega), 1e-9) << m.name;
      EXPECT_LE(max_abs(f.Lambda * r.omega), 1e-9) << m.name;
      EXPECT_LE(max_abs(f.P_perp * r.omega - r.omega), 1e-9) << m.name;
    }
  }
}

TEST(ToFull, InvertsRotorExample) {
  const SystemModel m = make_planar_rotor();
  const FullState s = to_full(m, {vec({2, 0}), vec({0, 0}), vec({4}), vec({std::numbers::pi / 2})});
  EXPECT_LE(max_abs(s.Q - vec({0, 2})), 1e-14);
  EXPECT_LE(max_abs(s.Qdot - vec({-2, 0})), 1e-14);
}

TEST(ToFull, IdentityFibrePoint) {
  const SystemModel m = make_hopf();
  const VectorXd q = vec({1.0, 0.0, -0.4, 0.7});
  const ReducedState r{q, vec({0.1, 0.0, 0.2, -0.3}), vec({0.5}), vec({0.0})};
  const FullState s = to_full(m, r);
  const BundleFrame<double> f = bundle_frame_at(m, q);
  EXPECT_LE(max_abs(s.Q - q), 1e-15);
  EXPECT_LE(max_abs(s.Qdot - (r.omega + f.K * (f.gamma_inv * r.p - f.A_conn * r.omega))), 1e-14);
}

TEST(ToFull, RoundTripOnRandomStates) {
  for (const SystemModel& m : {make_hopf(), make_planar_rotor(), anisotropic_twist()}) {
    std::mt19937_64 rng(100);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const FullState s = random_full(m, rng);
      const FullState back = to_full(m, to_reduced(m, s));
      worst = std::max({worst, max_abs(back.Q - s.Q), max_abs(back.Qdot - s.Qdot)});
    }
    EXPECT_LE(worst, 1e-9) << m.name;
  }
}

TEST(ToFull, RejectsChartExit) {
  const SystemModel m = anisotropic_twist();
  const ReducedState r{VectorXd::Zero(5), VectorXd::Zero(5), VectorXd::Zero(3), vec({4.0, 0, 0})};
  EXPECT_THROW(to_full(m, r), Error);
}

TEST(Energy, AtRestIsPotential) {
  const SystemModel m = make_planar_rotor();
  EXPECT_DOUBLE_EQ(energy(m, FullState{vec({2, 0}), vec({0, 0})}), 0.5);
  EXPECT_DOUBLE_EQ(energy(m, ReducedState{vec({2, 0}), vec({0, 0}), vec({0}), vec({0.3})}), 0.5);
}

TEST(Energy, RotorSpinningWithoutPotential) {
  SystemModel m = make_planar_rotor({1.0, 0.0});
  m.potential = ScalarFamily::from([](const auto& q) { return 0.0 * q(0); });
  EXPECT_NEAR(energy(m, ReducedState{vec({2, 0}), vec({0, 0}), vec({4}), vec({0})}), 2.0, 1e-15);
}

TEST(Energy, FullAndReducedAgree) {
  for (const SystemModel& m : {make_planar_rotor(), make_hopf(), anisotropic_twist()}) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
      const FullState s = random_full(m, rng);
      EXPECT_NEAR(energy(m, to_reduced(m, s)), energy(m, s), 1e-9) << m.name;
    }
  }
}

TEST(ReducedRhs, AbelianMomentumIsConstant) {
  for (const SystemModel& m : {make_planar_rotor(), make_hopf()}) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(reduced_rhs(m, to_reduced(m, random_full(m, rng))).p, VectorXd::Zero(1));
  }
}

TEST(ReducedRhs, RotorRelativeEquilibrium) {
  const SystemModel m = make_planar_rotor({1.0, 0.0});
  const ReducedRates d = reduced_rhs(m, {vec({1, 0}), vec({0, 0}), vec({1}), vec({0})});
  EXPECT_LE(max_abs(d.omega), 1e-12);
  EXPECT_LE(max_abs(d.p), 1e-15);
  EXPECT_LE(max_abs(d.q_star), 1e-15);
  EXPECT_NEAR(d.a(0), 1.0, 1e-14);
}

TEST(ReducedRhs, MatchesDerivativeOfFullFlow) {
  // d/dt to_reduced(phi_t(s)) at t = 0, by central differences of RK4 flows of the full system
  for (const SystemModel& m : {make_hopf(), make_planar_rotor(), anisotropic_twist()}) {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 5; ++i) {
      const FullState s = random_full(m, rng);
      const double h = 1e-4;
      const ReducedState rp = to_reduced(m, flow(m, s, h));
      const ReducedState rm = to_reduced(m, flow(m, s, -h));
      const ReducedRates d = reduced_rhs(m, to_reduced(m, s));
      EXPECT_LE(max_abs((rp.q_star - rm.q_star) / (2 * h) - d.q_star), 1e-6) << m.name;
      EXPECT_LE(max_abs((rp.omega - rm.omega) / (2 * h) - d.omega), 1e-6) << m.name;
      EXPECT_LE(max_abs((rp.p - rm.p) / (2 * h) - d.p), 1e-6) << m.name;
      EXPECT_LE(max_abs(group_difference(m.group, rp.a, rm.a) / (2 * h) - d.a), 1e-6) << m.name;
    }
  }
}

TEST(ReducedRhs, CompletionTermWithCurvedGauge) {
  // rotor with a nonlinear gauge chi = y - 0.3 x^2 exercises the chi-Hessian term
  SystemModel m = make_planar_rotor();
  m.gauge = VecFamily::from([](const auto& q) {
    using T = typename std::decay_t<decltype(q)>::Scalar;
    Vec<T> g(1);
    g(0) = q(1) - 0.3 * q(0) * q(0);
    return g;
  });
  m.fibre_guess = [](const VectorXd& q) { return VectorXd::Constant(1, std::atan2(q(1), q(0))); };
  std::mt19937_64 rng(2);
  for (int i = 0; i < 5; ++i) {
    FullState s = random_full(m, rng);
    s.Q = vec({1.2, 0.4 + 0.1 * i});
    const double h = 1e-4;
    const ReducedState rp = to_reduced(m, flow(m, s, h));
    const ReducedState rm = to_reduced(m, flow(m, s, -h));
    const ReducedState r = to_reduced(m, s);
    const GeometryCache c = geometry_at(m, SigmaPoint{r.q_star});
    const ReducedRates d = reduced_rhs(m, c, r);
    EXPECT_GT(max_abs(horizontal_forces(c, r.omega, r.p).completion), 1e-3);
    EXPECT_LE(max_abs((rp.omega - rm.omega) / (2 * h) - d.omega), 1e-6);
  }
}

TEST(Integrate, EquilibriumIsStationary) {
  const SystemModel m = make_planar_rotor({1.0, 0.0});
  const ReducedState r0{vec({1, 0}), vec({0, 0}), vec({1}), vec({0})};
  const Trajectory tr = integrate(m, r0, Mode::Reduced, {1.0, 1e-2, 10});
  ASSERT_EQ(tr.size(), 101u);
  for (const ReducedState& r : tr.reduced) {
    EXPECT_LE(max_abs(r.q_star - r0.q_star), 1e-10);
    EXPECT_LE(max_abs(r.omega), 1e-10);
    EXPECT_LE(max_abs(r.p - r0.p), 1e-10);
  }
  EXPECT_NEAR(tr.reduced.back().a(0), 1.0, 1e-10);
}

TEST(Integrate, RestWithoutPotentialIsConstant) {
  SystemModel m = make_hopf({0.0});
  const FullState s{vec({0.5, 0.2, -0.1, 0.3}), VectorXd::Zero(4)};
  for (Mode mode : {Mode::Full, Mode::Reduced}) {
    const Trajectory tr = integrate(m, s, mode, {0.5, 1e-2, 5});
    const FullState last = mode == Mode::Full ? tr.full.back() : to_full(m, tr.reduced.back());
    EXPECT_LE(max_abs(last.Q - s.Q), 1e-12);
    EXPECT_LE(max_abs(last.Qdot), 1e-12);
  }
}

TEST(Integrate, TimesAreStrictlyIncreasing) {
  const Trajectory tr = integrate(make_hopf(), FullState{vec({1, 0, 0.3, 0.1}), vec({0, 0.5, 0.1, 0})}, Mode::Reduced,
                                  {0.1, 1e-3, 10});
  for (std::size_t i = 1; i < tr.size(); ++i) EXPECT_GT(tr.t[i], tr.t[i - 1]);
  for (double e : tr.energy) EXPECT_TRUE(std::isfinite(e));
}

TEST(Integrate, RejectsBadOptions) {
  const SystemModel m = make_planar_rotor();
  const FullState s{vec({2, 0}), vec({0, 0})};
  EXPECT_THROW(integrate(m, s, Mode::Full, {0.0, 1e-3, 10}), Error);
  EXPECT_THROW(integrate(m, s, Mode::Full, {1.0, -1e-3, 10}), Error);
  EXPECT_THROW(integrate(m, s, Mode::Full, {1.0, 0.3, 10}), Error);
}

TEST(Integrate, BlowUpIsNonFinite) {
  SystemModel m = make_planar_rotor();
  m.potential = ScalarFamily::from([](const auto& q) { return -1e300 * q(0) * q(0) * q(0) * q(0); });
  try {
    integrate(m, FullState{vec({2, 0}), vec({0, 0})}, Mode::Full, {1.0, 0.1, 0});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_TRUE(e.code() == ErrorCode::NonFiniteState || e.code() == ErrorCode::EvaluationFailure ||
                e.code() == ErrorCode::DomainViolation);
  }
}

TEST(Compare, IdenticalTrajectoriesGiveZero) {
  const SystemModel m = make_hopf();
  const Trajectory full = integrate(m, FullState{vec({1, 0.2, 0.3, 0.1}), vec({0, 0.5, 0.1, 0})}, Mode::Full,
                                    {0.1, 1e-2, 0});
  Trajectory red;
  red.mode = Mode::Reduced;
  red.t = full.t;
  for (const FullState& s : full.full) red.reduced.push_back(to_reduced(m, s));
  EXPECT_EQ(compare_trajectories(m, full, red).max_dev, 0.0);
}

TEST(Compare, GridMismatch) {
  const SystemModel m = make_planar_rotor();
  const FullState s{vec({2, 0}), vec({0, 1})};
  const Trajectory a = integrate(m, s, Mode::Full, {0.1, 1e-2, 0});
  const Trajectory b = integrate(m, s, Mode::Reduced, {0.2, 1e-2, 0});
  try {
    compare_trajectories(m, a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
}

TEST(Compare, ShortOracleRunsAgree) {
  for (const SystemModel& m : {make_planar_rotor(), make_hopf(), anisotropic_twist()}) {
    std::mt19937_64 rng(4);
    const FullState s = random_full(m, rng, 0.5);
    const IntegrateOptions opt{1.0, 1e-3, 10};
    const DeviationReport rep =
        compare_trajectories(m, integrate(m, s, Mode::Full, opt), integrate(m, s, Mode::Reduced, opt));
    EXPECT_LE(rep.max_dev, 1e-8) << m.name;
  }
}
