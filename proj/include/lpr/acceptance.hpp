#pragma once

// Acceptance suite with pinned seeds and tolerances. Each criterion reports one line.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lpr/bundle_geometry.hpp"
#include "lpr/dynamics.hpp"
#include "lpr/equilibria.hpp"
#include "lpr/frame_checks.hpp"
#include "lpr/system_model.hpp"
#include "lpr/variations.hpp"

namespace lpr {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

namespace acceptance {

inline constexpr double kInvariantTol = 1e-10;
inline constexpr double kInvariantSeconds = 5.0;
inline constexpr double kBlockTol = 1e-10;
inline constexpr double kOracleTol = 1e-6;
inline constexpr double kRatioLo = 12.0, kRatioHi = 20.0;
inline constexpr double kOracleSeconds = 60.0;
inline constexpr double kEnergyTol = 1e-8;
inline constexpr double kAbelianMomentumTol = 1e-12;
inline constexpr double kGaugeTol = 1e-8;
inline constexpr double kOrderLo = 1.7, kOrderHi = 2.3;
inline constexpr double kAblationFactor = 1e3;
inline constexpr double kEquilibriumTol = 1e-8;
inline constexpr double kConnectionTol = 1e-8;
inline constexpr double kCommutatorFactor = 10.0;
inline constexpr double kTotalSeconds = 120.0;

inline VectorXd vec(std::initializer_list<double> xs) {
  VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

inline SystemModel anisotropic_twist() {
  TwistedSu2Params tw;
  tw.connection = linear_twist_connection(1.0);
  tw.inertia = vec({1.0, 2.0, 3.0});
  return make_twisted_su2(tw);
}

inline std::vector<SystemModel> builtin_models() { return {make_planar_rotor(), make_hopf(), make_twisted_su2()}; }

struct OracleCase {
  SystemModel model;
  FullState start;
};

inline std::vector<OracleCase> oracle_cases() {
  return {{make_planar_rotor({4.0, 1.0}), {vec({1.5, 0.3}), vec({1.5, 3.0})}},
          {make_hopf({2.0}), {vec({1.0, 0.2, 0.5, -0.3}), vec({0.8, 2.0, -1.2, 1.0})}}};
}

inline double max_abs(const DenseMatrix& x) { return x.size() ? x.cwiseAbs().maxCoeff() : 0.0; }

inline double drift(const std::vector<double>& xs) {
  double d = 0.0;
  for (double x : xs) d = std::max(d, std::abs(x - xs.front()));
  return d;
}

inline CriterionResult invariants() {
  CriterionResult r{1, "projector algebra", false, "", 0.0};
  double worst = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (const SystemModel& m : builtin_models())
    for (const SigmaPoint& p : sample_sigma(m, 100, 1001))
      worst = std::max(worst, cache_invariant_residual(geometry_at(m, p)));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = worst <= kInvariantTol && secs < kInvariantSeconds;
  r.detail = "max residual " + num(worst) + " <= " + num(kInvariantTol) + ", " + num(secs) + " s < " +
             num(kInvariantSeconds) + " s";
  return r;
}

inline CriterionResult block_identity() {
  CriterionResult r{2, "metric block identity", false, "", 0.0};
  double worst = 0.0;
  for (const SystemModel& m : builtin_models()) {
    std::mt19937_64 rng(2002);
    for (const SigmaPoint& p : sample_sigma(m, 50, 2003)) {
      const GeometryCache c = geometry_at(m, p);
      const MetricBlocks b = metric_blocks(c, m.group, GroupPoint{sample_group(m.group, rng)});
      worst = std::max(worst, max_abs(b.G_tilde_inv * b.G_tilde - expected_block_product(c)));
    }
  }
  r.pass = worst <= kBlockTol;
  r.detail = "max residual " + num(worst) + " <= " + num(kBlockTol);
  return r;
}

inline double oracle_deviation(const OracleCase& oc, double dt) {
  const IntegrateOptions opt{10.0, dt, 10};
  return compare_trajectories(oc.model, integrate(oc.model, oc.start, Mode::Full, opt),
                              integrate(oc.model, oc.start, Mode::Reduced, opt))
      .max_dev;
}

inline CriterionResult oracle() {
  CriterionResult r{3, "oracle equivalence", true, "", 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  for (const OracleCase& oc : oracle_cases()) {
    const double d1 = oracle_deviation(oc, 1e-3);
    const double d2 = oracle_deviation(oc, 5e-4);
    const double ratio = d1 / d2;
    r.pass = r.pass && d1 <= kOracleTol && ratio >= kRatioLo && ratio <= kRatioHi;
    r.detail += oc.model.name + ": dev " + num(d1) + ", ratio " + num(ratio) + "; ";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.pass = r.pass && secs < kOracleSeconds;
  r.detail += num(secs) + " s";
  return r;
}

inline CriterionResult conservation() {
  CriterionResult r{4, "conservation", true, "", 0.0};
  std::vector<OracleCase> cases = oracle_cases();
  cases.push_back({anisotropic_twist(), {vec({0.8, -0.5, 0.0, 0.0, 0.0}), vec({0.3, 0.4, 0.2, -0.1, 0.15})}});
  double e_worst = 0.0, p_worst = 0.0, chi_worst = 0.0;
  const IntegrateOptions opt{10.0, 1e-3, 10};
  for (const OracleCase& oc : cases) {
    for (Mode mode : {Mode::Full, Mode::Reduced}) {
      const Trajectory tr = integrate(oc.model, oc.start, mode, opt);
      e_worst = std::max(e_worst, drift(tr.energy));
      if (mode != Mode::Reduced) continue;
      for (std::size_t i = 0; i < tr.size(); ++i)
        chi_worst = std::max({chi_worst, tr.chi_resid[i], tr.tang_resid[i]});
      if (oc.model.group.abelian())
        for (const ReducedState& s : tr.reduced)
          p_worst = std::max(p_worst, (s.p - tr.reduced.front().p).cwiseAbs().maxCoeff());
    }
  }
  r.pass = e_worst <= kEnergyTol && p_worst <= kAbelianMomentumTol && chi_worst <= kGaugeTol;
  r.detail = "energy " + num(e_worst) + " <= " + num(kEnergyTol) + ", abelian p " + num(p_worst) + " <= " +
             num(kAbelianMomentumTol) + ", gauge " + num(chi_worst) + " <= " + num(kGaugeTol);
  return r;
}

inline CriterionResult variations() {
  CriterionResult r{5, "variational identities", true, "", 0.0};
  for (const SystemModel& m : {make_planar_rotor(), make_hopf(), anisotropic_twist()}) {
    const VariationFamily fam = make_variation_family(m);
    for (bool vertical : {false, true}) {
      const ConvergenceReport rep = variation_convergence(m, fam, 1e-3, vertical);
      r.pass = r.pass && rep.order >= kOrderLo && rep.order <= kOrderHi;
      r.detail += m.name + (vertical ? " vertical " : " horizontal ") + num(rep.order) + "; ";
    }
  }
  const auto ablation = [](const SystemModel& m, VariationTerms terms) {
    const VariationFamily fam = make_variation_family(m);
    return check_vertical_variation(m, fam, 5e-4, terms) / check_vertical_variation(m, fam, 5e-4);
  };
  const double c_gain = ablation(anisotropic_twist(), {false, true});
  const double f_gain = ablation(make_hopf(), {true, false});
  r.pass = r.pass && c_gain >= kAblationFactor && f_gain >= kAblationFactor;
  r.detail += "drop c x" + num(c_gain) + ", drop F x" + num(f_gain);
  return r;
}

inline CriterionResult equilibrium() {
  CriterionResult r{6, "relative equilibrium", false, "", 0.0};
  const SystemModel m = make_planar_rotor({1.0, 0.0});
  const EquilibriumResult eq = solve_equilibrium({m, vec({1.7, 0.0}), vec({2.0}), 1e-10, 50, true});
  const double err = std::abs(eq.q_star.q_star.norm() - std::sqrt(2.0));
  const ReducedState r0{eq.q_star.q_star, VectorXd::Zero(2), eq.p, vec({0.0})};
  const Trajectory tr = integrate(m, r0, Mode::Reduced, {10.0, 1e-3, 10});
  double d = 0.0;
  for (const ReducedState& s : tr.reduced)
    d = std::max({d, (s.q_star - r0.q_star).cwiseAbs().maxCoeff(), s.omega.cwiseAbs().maxCoeff(),
                  (s.p - r0.p).cwiseAbs().maxCoeff()});
  r.pass = err <= kEquilibriumTol && d <= kEquilibriumTol;
  r.detail = "|r - sqrt2| " + num(err) + ", drift " + num(d) + " <= " + num(kEquilibriumTol);
  return r;
}

inline CriterionResult connection_recovery() {
  CriterionResult r{7, "connection recovery", false, "", 0.0};
  TwistedSu2Params par;
  par.connection = linear_twist_connection(1.0);
  par.kappa = 0.7;
  par.inertia = vec({1.0, 1.5, 0.5});
  const SystemModel m = make_twisted_su2(par);
  std::mt19937_64 rng(7007);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    VectorXd q = VectorXd::Zero(5);
    q(0) = u(rng);
    q(1) = u(rng);
    DenseMatrix expect(3, 5);
    expect << par.connection.f0(VectorXd(q.head(2))), DenseMatrix::Identity(3, 3);
    worst = std::max(worst, max_abs(bundle_frame_at(m, q).A_conn - expect));
  }
  r.pass = worst <= kConnectionTol;
  r.detail = "max error " + num(worst) + " <= " + num(kConnectionTol);
  return r;
}

inline CriterionResult commutators() {
  CriterionResult r{8, "frame commutators", true, "", 0.0};
  double worst_ratio = 0.0;
  for (const SystemModel& m : {make_planar_rotor(), make_hopf(), make_twisted_su2(), anisotropic_twist()}) {
    std::mt19937_64 rng(8008);
    for (int i = 0; i < 5; ++i) {
      const SigmaPoint p = project_to_sigma(m, m.sampler(rng)).first;
      const GroupPoint a{0.5 * sample_group(m.group, rng)};
      for (double h : {2e-3, 1e-3}) {
        const double ratio = commutator_check(m, p, a, h).max() / (h * h);
        worst_ratio = std::max(worst_ratio, ratio);
      }
    }
  }
  r.pass = worst_ratio <= kCommutatorFactor;
  r.detail = "max residual / h^2 " + num(worst_ratio) + " <= " + num(kCommutatorFactor);
  return r;
}

}  // namespace acceptance

inline void print_result(std::ostream& os, const CriterionResult& r) {
  os << (r.pass ? "[PASS] " : "[FAIL] ") << "C" << r.id << " " << r.name << ": " << r.detail << " ("
     << acceptance::num(r.seconds) << " s)\n";
  os.flush();
}

/// Runs criteria 1-9 in order, printing each line as it finishes. A criterion that throws fails.
inline std::vector<CriterionResult> run_acceptance(std::ostream& os) {
  using Check = std::function<CriterionResult()>;
  const std::vector<std::pair<int, Check>> checks = {
      {1, acceptance::invariants},   {2, acceptance::block_identity},      {3, acceptance::oracle},
      {4, acceptance::conservation}, {5, acceptance::variations},          {6, acceptance::equilibrium},
      {7, acceptance::connection_recovery}, {8, acceptance::commutators}};
  std::vector<CriterionResult> out;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& [id, check] : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = {id, "criterion " + std::to_string(id), false, std::string("threw: ") + e.what(), 0.0};
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    print_result(os, r);
    out.push_back(r);
  }
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CriterionResult r{9, "suite runtime", total < acceptance::kTotalSeconds,
                    acceptance::num(total) + " s < " + acceptance::num(acceptance::kTotalSeconds) + " s", total};
  print_result(os, r);
  out.push_back(r);
  return out;
}

}  // namespace lpr
