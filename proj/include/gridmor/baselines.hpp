#pragma once

// Comparison bases: POD from state snapshots and structure-preserving
// quadratic balanced truncation (truncated Gramians of the lifted model).

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridmor/errors.hpp"
#include "gridmor/lin_solvers.hpp"
#include "gridmor/qirka.hpp"
#include "gridmor/quad_lift.hpp"
#include "gridmor/second_order.hpp"
#include "gridmor/sim.hpp"
#include "gridmor/strh2.hpp"

namespace gridmor {

struct SnapshotMatrix {
  Eigen::MatrixXd Delta;  // n x L, columns delta(t_k)
  Eigen::VectorXd times;
};

inline SnapshotMatrix collect_snapshots(const SecondOrderModel& m, const InputSignal& u, double T,
                                        double dt) {
  Trajectory tr = integrate_second_order(m, u, T, dt, Eigen::VectorXd::Zero(m.n),
                                         Eigen::VectorXd::Zero(m.n), /*keep_states=*/true);
  SnapshotMatrix snap;
  snap.Delta = tr.states->topRows(m.n);
  snap.times = tr.times;
  return snap;
}

// Leading r left singular vectors with a deterministic sign convention.
inline Eigen::MatrixXd pod_basis(const SnapshotMatrix& snapshots, int r) {
  if (snapshots.Delta.cols() < 1) throw validation_error("pod_basis: empty snapshot matrix");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(snapshots.Delta, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > 1e-12 * sv(0)) ++rank;
  if (r < 1 || r > rank)
    throw validation_error("pod_basis: r = " + std::to_string(r) +
                           " exceeds numerical snapshot rank " + std::to_string(rank));
  Eigen::MatrixXd Q = svd.matrixU().leftCols(r);
  for (Eigen::Index c = 0; c < Q.cols(); ++c) {
    Eigen::Index imax;
    Q.col(c).cwiseAbs().maxCoeff(&imax);
    if (Q(imax, c) < 0.0) Q.col(c) = -Q.col(c);
  }
  return Q;
}

enum class GramianBlock { First, Second };

struct QbtFactors {
  Eigen::MatrixXd Rb, Sb;            // factor^T factor = selected Gramian block
  Eigen::MatrixXd Uhat, Vhat;        // SVD of Rb Sb^T
  Eigen::VectorXd Sighat;            // nonincreasing
  Eigen::MatrixXd Vb, Wb;            // n x r_q
  double clipped_reach = 0.0;        // negative mass removed in the square roots
  double clipped_obs = 0.0;
};

// Truncated reachability/observability Gramians of the stabilized quadratic
// model, block extraction, and the balancing projection of Eq.-(45) shape.
inline QbtFactors str_qbt_basis(const QuadraticModel& qm, int r_q,
                                GramianBlock block = GramianBlock::Second,
                                bool obs_rhs_pq_order = true) {
  const int n = qm.n;
  const Eigen::MatrixXd E = qm.Edense();
  const SparseTensor3 Hsym = qm.Htens.symmetrize();

  const Eigen::MatrixXd P1 = solve_gen_lyapunov(E, qm.Amu, qm.Btil * qm.Btil.transpose());
  const Eigen::MatrixXd Fp = psd_factor(P1);
  Eigen::MatrixXd P2 = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  {
    const Eigen::MatrixXd M = Hsym.mode1_apply_pairs<double>(Fp, Fp);
    if (M.norm() > 0.0) P2 = solve_gen_lyapunov(E, qm.Amu, M * M.transpose());
  }
  const Eigen::MatrixXd Q1 =
      solve_gen_lyapunov(E.transpose(), qm.Amu.transpose(), qm.Cq.transpose() * qm.Cq);
  const Eigen::MatrixXd Fq = psd_factor(Q1);
  Eigen::MatrixXd Q2 = Eigen::MatrixXd::Zero(4 * n, 4 * n);
  {
    const Eigen::MatrixXd M = obs_rhs_pq_order ? Hsym.mode2_apply_pairs<double>(Fp, Fq)
                                               : Hsym.mode2_apply_pairs<double>(Fq, Fp);
    if (M.norm() > 0.0)
      Q2 = solve_gen_lyapunov(E.transpose(), qm.Amu.transpose(), M * M.transpose());
  }

  const int off = block == GramianBlock::First ? 0 : n;
  const Eigen::MatrixXd Pblk = (P1 + P2).block(off, off, n, n);
  const Eigen::MatrixXd Qblk = (Q1 + Q2).block(off, off, n, n);

  QbtFactors out;
  auto sym_sqrt = [](const Eigen::MatrixXd& X, double& clipped) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (X + X.transpose()));
    Eigen::VectorXd ev = es.eigenvalues();
    clipped = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) < 0.0) {
        clipped += -ev(i);
        ev(i) = 0.0;
      }
    // R with R^T R = X: rows scaled by sqrt eigenvalues
    return (ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose()).eval();
  };
  out.Rb = sym_sqrt(Pblk, out.clipped_reach);
  out.Sb = sym_sqrt(Qblk, out.clipped_obs);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(out.Rb * out.Sb.transpose(),
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  out.Uhat = svd.matrixU();
  out.Vhat = svd.matrixV();
  out.Sighat = svd.singularValues();

  Eigen::Index rank = 0;
  while (rank < out.Sighat.size() && out.Sighat(rank) > 1e-12 * out.Sighat(0)) ++rank;
  if (r_q < 1 || r_q > rank)
    throw validation_error("str_qbt_basis: r_q = " + std::to_string(r_q) +
                           " exceeds numerical rank " + std::to_string(rank) +
                           " of Rb Sb^T");
  const Eigen::VectorXd sc = out.Sighat.head(r_q).cwiseSqrt().cwiseInverse();
  out.Vb = out.Rb.transpose() * out.Uhat.leftCols(r_q) * sc.asDiagonal();
  out.Wb = out.Sb.transpose() * out.Vhat.leftCols(r_q) * sc.asDiagonal();
  return out;
}

// Oblique (Petrov-Galerkin) projection of the second-order model; symmetry of
// the reduced matrices is not guaranteed here.
inline ReducedSecondOrderModel reduce_with_petrov(const SecondOrderModel& m,
                                                  const Eigen::MatrixXd& Vb,
                                                  const Eigen::MatrixXd& Wb) {
  if (Vb.rows() != m.n || Wb.rows() != m.n || Vb.cols() != Wb.cols())
    throw validation_error("reduce_with_petrov: basis dimension mismatch");
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Wb.transpose() * Vb);
    const double smin = svd.singularValues().minCoeff();
    if (smin <= 0.0 || svd.singularValues().maxCoeff() / smin > 1e12)
      throw numerical_error("reduce_with_petrov: W^T V near singular");
  }
  ReducedSecondOrderModel rom;
  rom.Mr = Wb.transpose() * m.Mdiag.asDiagonal() * Vb;
  rom.Dr = Wb.transpose() * m.Ddiag.asDiagonal() * Vb;
  rom.Br = Wb.transpose() * m.Bvec;
  rom.Cr = m.Cout * Vb;
  rom.V = Vb;
  rom.W = Wb;
  rom.galerkin = false;
  return rom;
}

inline ReducedSecondOrderModel reduce_with_pod(const SecondOrderModel& m,
                                               const Eigen::MatrixXd& pod) {
  ReductionBasis basis;
  basis.V_T = pod;
  basis.Vfinal = pod;
  basis.r = static_cast<int>(pod.cols());
  return reduce_second_order(m, basis);
}

}  // namespace gridmor
