#pragma once

// Exact quadratic lifting of the swing model: q = [delta; ddelta; sin(delta);
// cos(delta)], coupling block matrices, sparse tensor assembly, the
// initial-condition shift, and the mu spectral stabilization.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gridmor/errors.hpp"
#include "gridmor/lin_solvers.hpp"
#include "gridmor/second_order.hpp"
#include "gridmor/tensor.hpp"

namespace gridmor {

inline Eigen::VectorXd lift_state(const Eigen::VectorXd& delta, const Eigen::VectorXd& ddelta) {
  if (delta.size() != ddelta.size()) throw validation_error("lift_state: dimension mismatch");
  const Eigen::Index n = delta.size();
  Eigen::VectorXd q(4 * n);
  q.head(n) = delta;
  q.segment(n, n) = ddelta;
  q.segment(2 * n, n) = delta.array().sin();
  q.tail(n) = delta.array().cos();
  return q;
}

struct CouplingBlocks {
  Eigen::SparseMatrix<double> Z;    // n x n^2, cos-weighted difference blocks
  Eigen::SparseMatrix<double> Psi;  // n x n^2, sin-weighted blocks
  Eigen::SparseMatrix<double> Phi;  // n x n^2, Hadamard selector: Phi(u (x) v) = u o v
};

inline CouplingBlocks build_coupling_blocks(const SecondOrderModel& m) {
  const int n = m.n;
  using T = Eigen::Triplet<double>;
  std::vector<T> z, psi, phi;
  for (int k = 0; k < n; ++k) phi.emplace_back(k, k * n + k, 1.0);
  auto add_pair = [&](int k, int j, double K, double gamma) {
    // block k, neighbor j: diagonal entry (j,j) and row entry (k,j)
    const double c = K * std::cos(gamma);
    const double s = -0.5 * K * std::sin(gamma);
    z.emplace_back(j, k * n + j, c);
    z.emplace_back(k, k * n + j, -c);
    psi.emplace_back(j, k * n + j, s);
    psi.emplace_back(k, k * n + j, s);
  };
  for (const auto& c : m.couplings) {
    add_pair(c.i, c.j, c.K, c.gamma);
    add_pair(c.j, c.i, c.K, c.gamma);
  }
  CouplingBlocks b;
  const Eigen::Index n2 = static_cast<Eigen::Index>(n) * n;
  b.Z.resize(n, n2);
  b.Psi.resize(n, n2);
  b.Phi.resize(n, n2);
  b.Z.setFromTriplets(z.begin(), z.end());
  b.Psi.setFromTriplets(psi.begin(), psi.end());
  b.Phi.setFromTriplets(phi.begin(), phi.end());
  return b;
}

// Lifted system before the initial-condition shift: E qdot = A q + H(q (x) q) + B u.
struct QuadraticSystem {
  int n = 0;           // oscillator count; state dimension is N = 4n
  Eigen::VectorXd Ediag;
  Eigen::MatrixXd A;
  SparseTensor3 H;
  Eigen::MatrixXd B;   // N x 1
  Eigen::MatrixXd C;   // p x N

  int N() const { return 4 * n; }
  Eigen::MatrixXd Edense() const { return Ediag.asDiagonal(); }
};

inline QuadraticSystem assemble_quadratic(const SecondOrderModel& m) {
  const int n = m.n;
  const int N = 4 * n;
  QuadraticSystem sys;
  sys.n = n;
  sys.Ediag = Eigen::VectorXd::Ones(N);
  sys.Ediag.segment(n, n) = m.Mdiag;

  sys.A = Eigen::MatrixXd::Zero(N, N);
  sys.A.block(0, n, n, n).setIdentity();
  sys.A.block(n, n, n, n) = (-m.Ddiag).asDiagonal();

  sys.B = Eigen::MatrixXd::Zero(N, 1);
  sys.B.block(n, 0, n, 1) = m.Bvec;

  sys.C = Eigen::MatrixXd::Zero(m.p(), N);
  sys.C.leftCols(n) = m.Cout;

  // Tensor entries, symmetric in modes 2,3 by the half-splitting; rows 1..n
  // stay empty.
  std::vector<SparseTensor3::Entry> ent;
  ent.reserve(8 * m.couplings.size() + 4 * n);
  for (int i = 0; i < n; ++i) {
    // d(sin)/dt = ddelta o cos, d(cos)/dt = -ddelta o sin
    ent.push_back({2 * n + i, n + i, 3 * n + i, 0.5});
    ent.push_back({2 * n + i, 3 * n + i, n + i, 0.5});
    ent.push_back({3 * n + i, n + i, 2 * n + i, -0.5});
    ent.push_back({3 * n + i, 2 * n + i, n + i, -0.5});
  }
  auto add_f_terms = [&](int i, int j, double K, double gamma) {
    // quadratic part of -f_i: K cos(g) (s_j c_i - s_i c_j) + K sin(g) (c_i c_j + s_i s_j)
    const double c = 0.5 * K * std::cos(gamma);
    const double s = 0.5 * K * std::sin(gamma);
    const int row = n + i;
    ent.push_back({row, 2 * n + j, 3 * n + i, c});
    ent.push_back({row, 3 * n + i, 2 * n + j, c});
    ent.push_back({row, 2 * n + i, 3 * n + j, -c});
    ent.push_back({row, 3 * n + j, 2 * n + i, -c});
    ent.push_back({row, 3 * n + i, 3 * n + j, s});
    ent.push_back({row, 3 * n + j, 3 * n + i, s});
    ent.push_back({row, 2 * n + i, 2 * n + j, s});
    ent.push_back({row, 2 * n + j, 2 * n + i, s});
  };
  for (const auto& c : m.couplings) {
    add_f_terms(c.i, c.j, c.K, c.gamma);
    add_f_terms(c.j, c.i, c.K, c.gamma);
  }
  sys.H = SparseTensor3(N, std::move(ent));
  return sys;
}

inline Eigen::VectorXd quadratic_rhs(const QuadraticSystem& sys, const Eigen::VectorXd& q,
                                     double u) {
  return sys.A * q + sys.H.mode1_apply<double>(q, q) + sys.B.col(0) * u;
}

// Stabilized, shifted quadratic model: E xdot = Amu x + H(x (x) x) + Btil [u; 1].
struct QuadraticModel {
  int n = 0;
  Eigen::VectorXd Ediag;
  Eigen::MatrixXd Amu;
  SparseTensor3 Htens;
  Eigen::MatrixXd Btil;  // N x 2
  Eigen::MatrixXd Cq;    // p x N
  Eigen::VectorXd q0;
  double mu = 0.0;

  int N() const { return 4 * n; }
  Eigen::MatrixXd Edense() const { return Ediag.asDiagonal(); }
};

// Largest real part over the generalized eigenvalues of (E, A), E diagonal.
inline double spectral_abscissa(const Eigen::VectorXd& Ediag, const Eigen::MatrixXd& A) {
  if ((Ediag.array() == 0.0).any())
    throw numerical_error("spectral_abscissa: singular E (zero-inertia node?)");
  Eigen::MatrixXd M = Ediag.cwiseInverse().asDiagonal() * A;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw numerical_error("spectral_abscissa: eigen failure");
  return es.eigenvalues().real().maxCoeff();
}

// Atilde = A + H((I (x) q0) + (q0 (x) I)), assembled in one sparse pass:
// column k picks up value*q0_k' from every tensor entry touching index k in
// mode 2 or 3.
inline Eigen::MatrixXd shifted_linear_part(const QuadraticSystem& sys, const Eigen::VectorXd& q0) {
  Eigen::MatrixXd At = sys.A;
  for (const auto& e : sys.H.entries()) {
    At(e.i, e.j) += e.v * q0(e.k);
    At(e.i, e.k) += e.v * q0(e.j);
  }
  return At;
}

inline QuadraticModel shift_and_stabilize(const QuadraticSystem& sys, const Eigen::VectorXd& q0,
                                          double mu, bool check_stability = true) {
  if (mu < 0.0) throw validation_error("shift_and_stabilize: mu must be nonnegative");
  if (q0.size() != sys.N()) throw validation_error("shift_and_stabilize: q0 length mismatch");
  const int n = sys.n;
  for (int i = 0; i < n; ++i) {
    const double s = q0(2 * n + i), c = q0(3 * n + i);
    if (std::abs(s * s + c * c - 1.0) > 1e-10)
      throw validation_error("shift_and_stabilize: q0 is not on the lift manifold");
  }
  QuadraticModel qm;
  qm.n = n;
  qm.Ediag = sys.Ediag;
  qm.Htens = sys.H;
  qm.Cq = sys.C;
  qm.q0 = q0;
  qm.mu = mu;
  qm.Amu = shifted_linear_part(sys, q0) - mu * Eigen::MatrixXd(sys.Ediag.asDiagonal());
  qm.Btil.resize(sys.N(), 2);
  qm.Btil.col(0) = sys.B.col(0);
  qm.Btil.col(1) = sys.A * q0 + sys.H.mode1_apply<double>(q0, q0);
  if (check_stability) {
    const double alpha = spectral_abscissa(qm.Ediag, qm.Amu);
    if (alpha >= 0.0)
      throw numerical_error("shift_and_stabilize: pencil not stable for mu = " +
                            std::to_string(mu) + " (spectral abscissa " + std::to_string(alpha) +
                            "); raise mu");
  }
  return qm;
}

// Smallest mu in {1e-4, 1e-3, ..., 1} that stabilizes the shifted pencil.
inline double suggest_mu(const QuadraticSystem& sys, const Eigen::VectorXd& q0) {
  const Eigen::MatrixXd At = shifted_linear_part(sys, q0);
  const Eigen::MatrixXd Ed = sys.Ediag.asDiagonal();
  for (double mu = 1e-4; mu <= 1.0 + 1e-15; mu *= 10.0) {
    if (spectral_abscissa(sys.Ediag, At - mu * Ed) < 0.0) return mu;
  }
  throw numerical_error("suggest_mu: no decade in [1e-4, 1] stabilizes the pencil");
}

// Lift an equilibrium delta* (f(delta*) = B) and verify that the quadratic
// right-hand side vanishes at the lifted point with u = 1.
inline Eigen::VectorXd lift_equilibrium(const SecondOrderModel& m, const QuadraticSystem& sys,
                                        const Eigen::VectorXd& deltastar, double tol = 1e-8) {
  if ((eval_f(m, deltastar) - m.Bvec).lpNorm<Eigen::Infinity>() > tol)
    throw validation_error("lift_equilibrium: input is not an equilibrium of f");
  const Eigen::VectorXd qstar =
      lift_state(deltastar, Eigen::VectorXd::Zero(deltastar.size()));
  const double res = quadratic_rhs(sys, qstar, 1.0).lpNorm<Eigen::Infinity>();
  if (res > tol)
    throw numerical_error("lift_equilibrium: quadratic RHS residual " + std::to_string(res));
  return qstar;
}

}  // namespace gridmor
