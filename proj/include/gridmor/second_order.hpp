#pragma once

// Second-order swing model: assembly from network parameters, evaluation of
// the sinusoidal coupling nonlinearity, its Jacobian, and Newton-based
// equilibrium computation with a gauge-fixed reference node.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridmor/errors.hpp"
#include "gridmor/network.hpp"

namespace gridmor {

struct SecondOrderModel {
  int n = 0;
  Eigen::VectorXd Mdiag;  // m_i = 2 J_i / omega_R
  Eigen::VectorXd Ddiag;  // d_i = D_i / omega_R, positive
  Eigen::VectorXd Bvec;
  Eigen::MatrixXd Cout;   // p x n
  std::vector<Coupling> couplings;

  int p() const { return static_cast<int>(Cout.rows()); }
};

enum class OutputKind { Mean, Matrix };

inline SecondOrderModel assemble_second_order(const PowerNetwork& net) {
  net.validate();
  SecondOrderModel m;
  m.n = net.n;
  m.Mdiag.resize(net.n);
  m.Ddiag.resize(net.n);
  m.Bvec.resize(net.n);
  for (int i = 0; i < net.n; ++i) {
    m.Mdiag(i) = 2.0 * net.nodes[i].J / net.omega_R;
    m.Ddiag(i) = net.nodes[i].D / net.omega_R;
    m.Bvec(i) = net.nodes[i].B;
  }
  if (net.output_C) {
    m.Cout = *net.output_C;
  } else {
    m.Cout = Eigen::MatrixXd::Constant(1, net.n, 1.0 / net.n);
  }
  m.couplings = net.couplings;
  return m;
}

// f_i(delta) = sum_{j != i} K_ij sin(delta_i - delta_j - gamma_ij)
inline Eigen::VectorXd eval_f(const SecondOrderModel& m, const Eigen::VectorXd& delta) {
  if (delta.size() != m.n) throw validation_error("eval_f: delta length mismatch");
  Eigen::VectorXd f = Eigen::VectorXd::Zero(m.n);
  for (const auto& c : m.couplings) {
    const double d = delta(c.i) - delta(c.j);
    f(c.i) += c.K * std::sin(d - c.gamma);
    f(c.j) += c.K * std::sin(-d - c.gamma);
  }
  return f;
}

inline Eigen::MatrixXd jacobian_f(const SecondOrderModel& m, const Eigen::VectorXd& delta) {
  if (delta.size() != m.n) throw validation_error("jacobian_f: delta length mismatch");
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m.n, m.n);
  for (const auto& c : m.couplings) {
    const double d = delta(c.i) - delta(c.j);
    const double cf = c.K * std::cos(d - c.gamma);
    const double cr = c.K * std::cos(-d - c.gamma);
    J(c.i, c.i) += cf;
    J(c.i, c.j) -= cf;
    J(c.j, c.j) += cr;
    J(c.j, c.i) -= cr;
  }
  return J;
}

// Solve f(delta*) = B with the gauge delta_g = 0. The uniform-shift direction
// makes the full Jacobian singular, so Newton runs on the square system with
// node g's angle and equation removed; the full residual (including component
// g) is then checked against the tolerance, which detects inconsistent
// injections.
inline Eigen::VectorXd solve_equilibrium(const SecondOrderModel& m, int gauge = -1,
                                         double tol = 1e-10, int max_iter = 100) {
  const int n = m.n;
  const int g = gauge < 0 ? n - 1 : gauge;
  if (g < 0 || g >= n) throw validation_error("solve_equilibrium: gauge index out of range");

  Eigen::VectorXd delta = Eigen::VectorXd::Zero(n);
  auto reduced_residual = [&](const Eigen::VectorXd& d) {
    Eigen::VectorXd full = eval_f(m, d) - m.Bvec;
    Eigen::VectorXd red(n - 1);
    for (int i = 0, k = 0; i < n; ++i)
      if (i != g) red(k++) = full(i);
    return red;
  };

  Eigen::VectorXd res = reduced_residual(delta);
  for (int it = 0; it < max_iter; ++it) {
    if (res.lpNorm<Eigen::Infinity>() <= tol) break;
    Eigen::MatrixXd Jfull = jacobian_f(m, delta);
    Eigen::MatrixXd Jred(n - 1, n - 1);
    for (int i = 0, r = 0; i < n; ++i) {
      if (i == g) continue;
      for (int j = 0, c = 0; j < n; ++j) {
        if (j == g) continue;
        Jred(r, c++) = Jfull(i, j);
      }
      ++r;
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Jred);
    if (lu.rcond() < 1e-14)
      throw numerical_error("solve_equilibrium: singular gauge-fixed Jacobian at iterate");
    Eigen::VectorXd step = lu.solve(-res);

    // damp by halving until the residual decreases
    double alpha = 1.0;
    const double res0 = res.norm();
    Eigen::VectorXd trial;
    Eigen::VectorXd trial_res;
    for (int h = 0; h < 60; ++h) {
      trial = delta;
      for (int i = 0, k = 0; i < n; ++i)
        if (i != g) trial(i) += alpha * step(k++);
      trial_res = reduced_residual(trial);
      if (trial_res.norm() < res0) break;
      alpha *= 0.5;
    }
    delta = trial;
    res = trial_res;
  }

  const Eigen::VectorXd full_res = eval_f(m, delta) - m.Bvec;
  if (full_res.lpNorm<Eigen::Infinity>() > tol)
    throw numerical_error("solve_equilibrium: no convergence (residual " +
                          std::to_string(full_res.lpNorm<Eigen::Infinity>()) +
                          "); injections may be infeasible");
  return delta;
}

}  // namespace gridmor
