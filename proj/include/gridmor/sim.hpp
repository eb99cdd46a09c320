#pragma once

// Fixed-step RK4 integration of the full second-order model, reduced
// second-order models, and the quadratic lifted model, plus the relative
// L-infinity output error.

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "gridmor/errors.hpp"
#include "gridmor/quad_lift.hpp"
#include "gridmor/second_order.hpp"

namespace gridmor {

using InputSignal = std::function<double(double)>;

inline InputSignal constant_input(double value) {
  return [value](double) { return value; };
}

struct Trajectory {
  Eigen::VectorXd times;    // uniform grid, times[0] = 0
  Eigen::MatrixXd outputs;  // p x steps
  std::optional<Eigen::MatrixXd> states;  // state dim x steps, when retained
};

namespace detail {

// Generic RK4 driver; deriv(t, x) -> xdot, out(x) -> output vector.
template <typename Deriv, typename Out>
Trajectory rk4(const Eigen::VectorXd& x0, double T, double dt, Deriv deriv, Out out,
               bool keep_states) {
  if (!(dt > 0.0) || !(T > 0.0)) throw validation_error("rk4: T and dt must be positive");
  const Eigen::Index steps = static_cast<Eigen::Index>(std::llround(T / dt)) + 1;
  Trajectory tr;
  tr.times.resize(steps);
  Eigen::VectorXd x = x0;
  Eigen::VectorXd y0 = out(x);
  tr.outputs.resize(y0.size(), steps);
  if (keep_states) tr.states.emplace(x.size(), steps);

  double t = 0.0;
  for (Eigen::Index s = 0; s < steps; ++s) {
    tr.times(s) = t;
    tr.outputs.col(s) = out(x);
    if (keep_states) tr.states->col(s) = x;
    if (s + 1 == steps) break;
    const Eigen::VectorXd k1 = deriv(t, x);
    const Eigen::VectorXd k2 = deriv(t + 0.5 * dt, x + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = deriv(t + 0.5 * dt, x + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = deriv(t + dt, x + dt * k3);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite())
      throw numerical_error("integration diverged (NaN/overflow) at t = " + std::to_string(t + dt));
    t += dt;
  }
  return tr;
}

}  // namespace detail

inline Trajectory integrate_second_order(const SecondOrderModel& m, const InputSignal& u, double T,
                                         double dt, const Eigen::VectorXd& delta0,
                                         const Eigen::VectorXd& ddelta0,
                                         bool keep_states = false) {
  const int n = m.n;
  if (delta0.size() != n || ddelta0.size() != n)
    throw validation_error("integrate_second_order: initial condition length mismatch");
  if ((m.Mdiag.array() <= 0.0).any())
    throw numerical_error("integrate_second_order: singular mass matrix");
  Eigen::VectorXd x0(2 * n);
  x0.head(n) = delta0;
  x0.tail(n) = ddelta0;
  const Eigen::VectorXd Minv = m.Mdiag.cwiseInverse();
  auto deriv = [&](double t, const Eigen::VectorXd& x) {
    Eigen::VectorXd dx(2 * n);
    dx.head(n) = x.tail(n);
    dx.tail(n) =
        Minv.cwiseProduct(m.Bvec * u(t) - m.Ddiag.cwiseProduct(x.tail(n)) - eval_f(m, x.head(n)));
    return dx;
  };
  auto out = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return m.Cout * x.head(n); };
  return detail::rk4(x0, T, dt, deriv, out, keep_states);
}

inline Trajectory integrate_quadratic(const QuadraticSystem& sys, const InputSignal& u, double T,
                                      double dt, const Eigen::VectorXd& q0,
                                      bool keep_states = false) {
  if (q0.size() != sys.N()) throw validation_error("integrate_quadratic: q0 length mismatch");
  if ((sys.Ediag.array() == 0.0).any())
    throw numerical_error("integrate_quadratic: singular E");
  const Eigen::VectorXd Einv = sys.Ediag.cwiseInverse();
  auto deriv = [&](double t, const Eigen::VectorXd& q) {
    return Einv
        .cwiseProduct(sys.A * q + sys.H.mode1_apply<double>(q, q) + sys.B.col(0) * u(t))
        .eval();
  };
  auto out = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd { return sys.C * q; };
  return detail::rk4(q0, T, dt, deriv, out, keep_states);
}

// Shifted/stabilized model with x(0) = 0 and utilde = [u; 1].
inline Trajectory integrate_quadratic(const QuadraticModel& qm, const InputSignal& u, double T,
                                      double dt,
                                      const std::optional<Eigen::VectorXd>& x0 = std::nullopt,
                                      bool keep_states = false) {
  const Eigen::VectorXd x_init = x0 ? *x0 : Eigen::VectorXd::Zero(qm.N());
  if (x_init.size() != qm.N()) throw validation_error("integrate_quadratic: x0 length mismatch");
  if ((qm.Ediag.array() == 0.0).any())
    throw numerical_error("integrate_quadratic: singular E");
  const Eigen::VectorXd Einv = qm.Ediag.cwiseInverse();
  auto deriv = [&](double t, const Eigen::VectorXd& x) {
    Eigen::Vector2d ut(u(t), 1.0);
    return Einv.cwiseProduct(qm.Amu * x + qm.Htens.mode1_apply<double>(x, x) + qm.Btil * ut)
        .eval();
  };
  auto out = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return qm.Cq * x; };
  return detail::rk4(x_init, T, dt, deriv, out, keep_states);
}

// max_t |y - y_r| / max_t |y|, per-output then the max over outputs.
inline double linf_rel_error(const Trajectory& y, const Trajectory& yr) {
  if (y.outputs.rows() != yr.outputs.rows() || y.outputs.cols() != yr.outputs.cols())
    throw validation_error("linf_rel_error: sample grids differ");
  double worst = 0.0;
  for (Eigen::Index r = 0; r < y.outputs.rows(); ++r) {
    const double denom = y.outputs.row(r).cwiseAbs().maxCoeff();
    if (denom == 0.0) throw validation_error("linf_rel_error: reference output identically zero");
    const double num = (y.outputs.row(r) - yr.outputs.row(r)).cwiseAbs().maxCoeff();
    worst = std::max(worst, num / denom);
  }
  return worst;
}

}  // namespace gridmor
