#pragma once

#include <functional>
#include <optional>
#include <string>

#include "lpr/error.hpp"
#include "lpr/numerics/diff.hpp"
#include "lpr/numerics/linalg.hpp"

namespace lpr {

using Residual = std::function<VectorXd(const VectorXd&)>;
using ResidualJacobian = std::function<DenseMatrix(const VectorXd&)>;

struct NewtonResult {
  VectorXd x;
  int iterations = 0;
  double residual_norm = 0.0;
};

/// Newton iteration on a square system. Without an explicit Jacobian the
/// residual is differentiated by central differences (the residual is an
/// opaque double function here).
inline NewtonResult newton_solve(const Residual& residual, const std::optional<ResidualJacobian>& jac,
                                 const VectorXd& x0, double tol, int max_iter,
                                 const DiffScheme& scheme = DiffScheme::central()) {
  if (!(tol > 0.0)) fail(ErrorCode::OutOfRange, "newton_solve: tol must be positive");
  NewtonResult out{x0, 0, 0.0};
  VectorXd r = residual(out.x);
  out.residual_norm = r.norm();
  while (!(out.residual_norm <= tol)) {
    if (out.iterations >= max_iter)
      fail(ErrorCode::NoConvergence, "newton_solve: residual " + std::to_string(out.residual_norm) +
                                         " after " + std::to_string(max_iter) + " iterations");
    const DenseMatrix J = jac ? (*jac)(out.x) : jacobian(residual, out.x, scheme);
    try {
      out.x -= solve_linear(J, r);
    } catch (const Error& e) {
      // A singular Jacobian at the starting point is reported as such; one
      // reached mid-iteration means the iteration has stalled.
      if (e.code() != ErrorCode::SingularMatrix || out.iterations == 0) throw;
      fail(ErrorCode::NoConvergence, "newton_solve: stalled at singular Jacobian after " +
                                         std::to_string(out.iterations) + " iterations");
    }
    ++out.iterations;
    r = residual(out.x);
    out.residual_norm = r.norm();
    if (!all_finite(out.x) || !std::isfinite(out.residual_norm))
      fail(ErrorCode::NoConvergence, "newton_solve: iterate became non-finite");
  }
  return out;
}

}  // namespace lpr
