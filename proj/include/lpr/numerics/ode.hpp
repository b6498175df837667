#pragma once

#include <functional>
#include <string>

#include "lpr/error.hpp"
#include "lpr/numerics/linalg.hpp"

namespace lpr {

using StateDerivative = std::function<VectorXd(const VectorXd& y, double t)>;

/// One classical fourth-order Runge-Kutta step.
inline VectorXd rk4_step(const StateDerivative& rhs, const VectorXd& y, double t, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::OutOfRange, "rk4_step: dt must be positive");
  const VectorXd k1 = rhs(y, t);
  const VectorXd k2 = rhs(y + 0.5 * dt * k1, t + 0.5 * dt);
  const VectorXd k3 = rhs(y + 0.5 * dt * k2, t + 0.5 * dt);
  const VectorXd k4 = rhs(y + dt * k3, t + dt);
  VectorXd out = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!all_finite(out)) fail(ErrorCode::NonFiniteState, "rk4_step produced a non-finite state at t=" + std::to_string(t + dt));
  return out;
}

}  // namespace lpr
