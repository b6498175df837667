#pragma once

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "lpr/bundle_geometry.hpp"
#include "lpr/error.hpp"
#include "lpr/system_model.hpp"

namespace lpr {

struct ModelReport {
  double action_law = 0.0;            ///< max |F(F(Q,a),b) - F(Q, a.b)|
  double identity_action = 0.0;       ///< max |F(Q, e) - Q|
  double isometry = 0.0;              ///< max |J^T G(F(Q,a)) J - G(Q)|
  double potential_invariance = 0.0;  ///< max |V(F(Q,a)) - V(Q)|
  double killing = 0.0;               ///< max |dF(Q, e + t e_mu)/dt - K_mu(Q)|
  double fp_min_singular = 0.0;       ///< smallest singular value of Phi over the section samples
  std::vector<VectorXd> points;
  std::vector<VectorXd> group_points;

  double max_residual() const {
    return std::max({action_law, identity_action, isometry, potential_invariance, killing});
  }
};

inline constexpr double kModelTol = 1e-6;

/// Evaluate the model checks without throwing on failure.
inline ModelReport inspect_model(const SystemModel& m, int n_samples, unsigned long long seed) {
  if (n_samples < 1) fail(ErrorCode::OutOfRange, "validate_model: n_samples must be >= 1");
  if (!m.sampler) fail(ErrorCode::ModelInvalid, m.name + ": model has no point sampler");
  std::mt19937_64 rng(seed);
  ModelReport rep;
  rep.fp_min_singular = std::numeric_limits<double>::infinity();
  const GroupChart& g = m.group;
  for (int s = 0; s < n_samples; ++s) {
    const VectorXd q = m.sampler(rng);
    const VectorXd a = sample_group(g, rng), b = sample_group(g, rng);
    rep.points.push_back(q);
    rep.group_points.push_back(a);

    const VectorXd fa = m.act(q, a);
    rep.action_law = std::max(rep.action_law, (m.act(fa, b) - m.act(q, g.compose<double>(a, b))).norm());
    rep.identity_action = std::max(rep.identity_action, (m.act(q, g.identity()) - q).norm());
    const DenseMatrix J = m.action_jacobian_q(q, a);
    rep.isometry = std::max(rep.isometry, (J.transpose() * m.G(fa) * J - m.G(q)).cwiseAbs().maxCoeff());
    rep.potential_invariance = std::max(rep.potential_invariance, std::abs(m.V(fa) - m.V(q)));
    rep.killing =
        std::max(rep.killing, (m.action_jacobian_a(q, g.identity()) - m.K(q)).cwiseAbs().maxCoeff());

    const SigmaPoint p = project_to_sigma(m, q).first;
    const BundleFrame<double> f = bundle_frame_at(m, p.q_star);
    const Eigen::JacobiSVD<DenseMatrix> svd(f.Phi);
    rep.fp_min_singular = std::min(rep.fp_min_singular, svd.singularValues().minCoeff());
  }
  return rep;
}

/// Checks the standing assumptions on a model; ModelInvalid if any residual exceeds 1e-6.
inline ModelReport validate_model(const SystemModel& m, int n_samples, unsigned long long seed) {
  ModelReport rep = inspect_model(m, n_samples, seed);
  std::ostringstream bad;
  auto check = [&](const char* what, double v) {
    if (!(v <= kModelTol)) bad << " " << what << "=" << v;
  };
  check("action_law", rep.action_law);
  check("identity_action", rep.identity_action);
  check("isometry", rep.isometry);
  check("potential_invariance", rep.potential_invariance);
  check("killing", rep.killing);
  if (!(rep.fp_min_singular > kModelTol)) bad << " fp_min_singular=" << rep.fp_min_singular;
  if (!bad.str().empty()) fail(ErrorCode::ModelInvalid, m.name + ":" + bad.str());
  return rep;
}

}  // namespace lpr
