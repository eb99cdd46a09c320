#pragma once

// Final structure-preserving reduction: extract the leading-row block of the
// Q-IRKA basis, append the output directions, orthonormalize, and project the
// second-order model with a Galerkin basis.

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "gridmor/errors.hpp"
#include "gridmor/lin_solvers.hpp"
#include "gridmor/log.hpp"
#include "gridmor/qirka.hpp"
#include "gridmor/quad_lift.hpp"
#include "gridmor/second_order.hpp"

namespace gridmor {

inline Eigen::MatrixXd extract_VT(const Eigen::MatrixXd& V) {
  if (V.rows() % 4 != 0) throw validation_error("extract_VT: row count is not 4n");
  return V.topRows(V.rows() / 4);
}

struct ReductionBasis {
  Eigen::MatrixXd V_T;     // n x r_q
  Eigen::MatrixXd Vfinal;  // n x r, orthonormal
  int r = 0;
};

inline ReductionBasis build_final_basis(const Eigen::MatrixXd& V_T, const Eigen::MatrixXd& Cout) {
  if (V_T.rows() != Cout.cols()) throw validation_error("build_final_basis: dimension mismatch");
  Eigen::MatrixXd concat(V_T.rows(), V_T.cols() + Cout.rows());
  concat.leftCols(V_T.cols()) = V_T;
  concat.rightCols(Cout.rows()) = Cout.transpose();
  if (concat.norm() == 0.0) throw validation_error("build_final_basis: all-zero concatenation");
  ReductionBasis basis;
  basis.V_T = V_T;
  basis.Vfinal = orth(concat);
  basis.r = static_cast<int>(basis.Vfinal.cols());
  const int formula_r =
      std::min(static_cast<int>(V_T.cols() + Cout.rows()), 2 * static_cast<int>(V_T.cols()));
  if (basis.r != std::min<int>(formula_r, static_cast<int>(V_T.rows())))
    log(LogLevel::Info, "build_final_basis: numerical rank " + std::to_string(basis.r) +
                            " differs from min(r_q+p, 2r_q) = " + std::to_string(formula_r));
  return basis;
}

struct ReducedSecondOrderModel {
  Eigen::MatrixXd Mr, Dr;  // r x r
  Eigen::VectorXd Br;
  Eigen::MatrixXd Cr;  // p x r
  Eigen::MatrixXd V;   // n x r trial basis, retained for exact-lift f_r
  Eigen::MatrixXd W;   // test basis; equals V for Galerkin
  bool galerkin = true;

  int r() const { return static_cast<int>(Mr.rows()); }
};

inline ReducedSecondOrderModel reduce_second_order(const SecondOrderModel& m,
                                                   const ReductionBasis& basis) {
  const Eigen::MatrixXd& V = basis.Vfinal;
  if (V.rows() != m.n) throw validation_error("reduce_second_order: basis row count mismatch");
  ReducedSecondOrderModel rom;
  rom.Mr = V.transpose() * m.Mdiag.asDiagonal() * V;
  rom.Dr = V.transpose() * m.Ddiag.asDiagonal() * V;
  rom.Mr = 0.5 * (rom.Mr + rom.Mr.transpose()).eval();
  rom.Dr = 0.5 * (rom.Dr + rom.Dr.transpose()).eval();
  rom.Br = V.transpose() * m.Bvec;
  rom.Cr = m.Cout * V;
  rom.V = V;
  rom.W = V;
  rom.galerkin = true;
  return rom;
}

// f_r(delta_r) = W^T f(V delta_r), exact lift (no hyper-reduction).
inline Eigen::VectorXd eval_f_r(const ReducedSecondOrderModel& rom, const SecondOrderModel& m,
                                const Eigen::VectorXd& delta_r) {
  if (delta_r.size() != rom.V.cols()) throw validation_error("eval_f_r: reduced state length mismatch");
  return rom.W.transpose() * eval_f(m, rom.V * delta_r);
}

enum class StrH2Variant { A /* two-sided */, B /* one-sided */ };

struct StrH2Diagnostics {
  bool qirka_converged = false;
  int qirka_iterations = 0;
  int r_q = 0;
  int r = 0;
  double mu = 0.0;
  bool stable_reduced = false;
  double wt_angle = std::numeric_limits<double>::quiet_NaN();  // Theorem-1 max principal angle
};

// Largest principal angle (rad) between the column ranges of X and Y.
inline double max_principal_angle(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  const Eigen::MatrixXd Qx = orth(X);
  const Eigen::MatrixXd Qy = orth(Y);
  if (Qx.cols() != Qy.cols()) return 2.0 * std::atan(1.0);  // subspace dims differ: pi/2
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Qx.transpose() * Qy);
  const double smin = svd.singularValues().minCoeff();
  return std::acos(std::min(1.0, std::max(-1.0, smin)));
}

struct StrH2Result {
  ReducedSecondOrderModel rom;
  ReductionBasis basis;
  QirkaResult qirka;
  StrH2Diagnostics diag;
};

inline StrH2Result strh2_reduce(const SecondOrderModel& m, const QuadraticModel& qm, int r_q,
                                StrH2Variant variant, const QirkaOptions& opts = {}) {
  StrH2Result out;
  out.qirka = qirka(qm, r_q,
                    variant == StrH2Variant::A ? QirkaMode::TwoSided : QirkaMode::OneSided, opts);
  const Eigen::MatrixXd V_T = extract_VT(out.qirka.V);
  out.basis = build_final_basis(V_T, m.Cout);
  out.rom = reduce_second_order(m, out.basis);
  out.diag.qirka_converged = out.qirka.converged;
  out.diag.qirka_iterations = out.qirka.iterations;
  out.diag.r_q = r_q;
  out.diag.r = out.basis.r;
  out.diag.mu = qm.mu;
  out.diag.stable_reduced = out.qirka.stable_reduced;
  if (variant == StrH2Variant::A) {
    const Eigen::MatrixXd W_T = extract_VT(out.qirka.W);
    if (W_T.norm() > 0.0 && m.Cout.norm() > 0.0)
      out.diag.wt_angle = max_principal_angle(W_T, m.Cout.transpose());
  }
  return out;
}

inline StrH2Result strh2_pipeline(const SecondOrderModel& m, int r_q, double mu,
                                  StrH2Variant variant, const QirkaOptions& opts = {}) {
  const QuadraticSystem sys = assemble_quadratic(m);
  const Eigen::VectorXd q0 =
      lift_state(Eigen::VectorXd::Zero(m.n), Eigen::VectorXd::Zero(m.n));
  const QuadraticModel qm = shift_and_stabilize(sys, q0, mu);
  return strh2_reduce(m, qm, r_q, variant, opts);
}

}  // namespace gridmor
