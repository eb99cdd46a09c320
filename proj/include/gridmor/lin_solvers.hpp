#pragma once

// Dense linear-algebra kernels: shifted solves, generalized spectral
// decomposition, generalized Lyapunov equations, and rank-revealing
// orthonormalization.

#include <algorithm>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridmor/errors.hpp"

namespace gridmor {

using Complex = std::complex<double>;

// Factored form of (-lambda E - A); reusable for the transposed system
// (-lambda E^T - A^T) via transpose solves.
class ShiftedSolver {
public:
  ShiftedSolver(const Eigen::MatrixXd& E, const Eigen::MatrixXd& A, Complex lambda)
      : lambda_(lambda), lu_((-lambda * E - A.cast<Complex>()).eval()) {
    if (lu_.rcond() < 1e-14)
      throw numerical_error("solve_shifted: shifted matrix singular at lambda = (" +
                            std::to_string(lambda.real()) + ", " + std::to_string(lambda.imag()) +
                            "i)");
  }

  Eigen::VectorXcd solve(const Eigen::VectorXcd& rhs) const { return lu_.solve(rhs); }
  Eigen::VectorXcd solve_transposed(const Eigen::VectorXcd& rhs) const {
    return lu_.transpose().solve(rhs);
  }
  Complex lambda() const { return lambda_; }

private:
  Complex lambda_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
};

inline Eigen::VectorXcd solve_shifted(const Eigen::MatrixXd& E, const Eigen::MatrixXd& A,
                                      Complex lambda, const Eigen::VectorXcd& rhs) {
  if (E.rows() != E.cols() || A.rows() != A.cols() || E.rows() != A.rows() ||
      rhs.size() != E.rows())
    throw validation_error("solve_shifted: dimension mismatch");
  return ShiftedSolver(E, A, lambda).solve(rhs);
}

struct SpectralPair {
  Eigen::MatrixXcd R;       // right eigenvectors, columns
  Eigen::VectorXcd Lambda;  // eigenvalues, conjugate pairs adjacent
};

// Spectral decomposition of the pencil: A_r R = E_r R Lambda. Eigenvalues are
// sorted by (Re, Im) with conjugate pairs adjacent; paired eigenvectors are
// exact conjugates; columns get a deterministic phase.
inline SpectralPair spectral_decompose(const Eigen::MatrixXd& Er, const Eigen::MatrixXd& Ar,
                                       double defect_cond_limit = 1e12) {
  if (Er.rows() != Er.cols() || Ar.rows() != Ar.cols() || Er.rows() != Ar.rows())
    throw validation_error("spectral_decompose: dimension mismatch");
  const int r = static_cast<int>(Er.rows());
  Eigen::PartialPivLU<Eigen::MatrixXd> elu(Er);
  if (elu.rcond() < 1e-14) throw numerical_error("spectral_decompose: E_r singular");
  Eigen::MatrixXd M = elu.solve(Ar);
  Eigen::EigenSolver<Eigen::MatrixXd> es(M);
  if (es.info() != Eigen::Success)
    throw numerical_error("spectral_decompose: eigen iteration failed");

  std::vector<int> order(r);
  std::iota(order.begin(), order.end(), 0);
  const Eigen::VectorXcd ev = es.eigenvalues();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (ev(a).real() != ev(b).real()) return ev(a).real() < ev(b).real();
    return ev(a).imag() < ev(b).imag();
  });

  SpectralPair sp;
  sp.R.resize(r, r);
  sp.Lambda.resize(r);
  for (int c = 0; c < r; ++c) {
    sp.Lambda(c) = ev(order[c]);
    sp.R.col(c) = es.eigenvectors().col(order[c]);
  }
  // enforce exact conjugation within adjacent pairs
  for (int c = 0; c + 1 < r; ++c) {
    const Complex a = sp.Lambda(c), b = sp.Lambda(c + 1);
    if (a.imag() < 0.0 && std::abs(b - std::conj(a)) <= 1e-8 * (1.0 + std::abs(a))) {
      sp.Lambda(c + 1) = std::conj(a);
      sp.R.col(c + 1) = sp.R.col(c).conjugate();
      ++c;
    }
  }
  // deterministic scaling: unit norm, largest-magnitude entry real positive
  for (int c = 0; c < r; ++c) {
    Eigen::Index imax;
    sp.R.col(c).cwiseAbs().maxCoeff(&imax);
    const Complex piv = sp.R(imax, c);
    if (std::abs(piv) > 0.0) sp.R.col(c) *= std::abs(piv) / piv / sp.R.col(c).norm();
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(sp.R);
  const double smin = svd.singularValues()(r - 1);
  if (smin <= 0.0 || svd.singularValues()(0) / smin > defect_cond_limit)
    throw numerical_error("spectral_decompose: (near-)defective pencil, eigenvector condition " +
                          std::to_string(smin > 0 ? svd.singularValues()(0) / smin : 0.0));
  return sp;
}

// Solve A P E^T + E P A^T + Q = 0 for symmetric P, with the pencil (E, A)
// stable. Reduction with E^{-1} then a complex-Schur triangular solve.
inline Eigen::MatrixXd solve_gen_lyapunov(const Eigen::MatrixXd& E, const Eigen::MatrixXd& A,
                                          const Eigen::MatrixXd& Q, double residual_tol = 1e-8) {
  const Eigen::Index N = E.rows();
  if (A.rows() != N || A.cols() != N || Q.rows() != N || Q.cols() != N || E.cols() != N)
    throw validation_error("solve_gen_lyapunov: dimension mismatch");
  Eigen::PartialPivLU<Eigen::MatrixXd> elu(E);
  if (elu.rcond() < 1e-14) throw numerical_error("solve_gen_lyapunov: singular E");
  const Eigen::MatrixXd Abar = elu.solve(A);
  const Eigen::MatrixXd Qbar = elu.solve(elu.solve(Q).transpose()).transpose();

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(Abar.cast<Complex>());
  if (schur.info() != Eigen::Success)
    throw numerical_error("solve_gen_lyapunov: Schur decomposition failed");
  const Eigen::MatrixXcd& T = schur.matrixT();
  const Eigen::MatrixXcd& U = schur.matrixU();
  for (Eigen::Index i = 0; i < N; ++i)
    if (T(i, i).real() >= 0.0)
      throw numerical_error("solve_gen_lyapunov: pencil not stable (eigenvalue with Re = " +
                            std::to_string(T(i, i).real()) + ")");

  // T Y + Y T^H + Qh = 0 with T upper triangular, solved backwards
  Eigen::MatrixXcd Qh = U.adjoint() * Qbar.cast<Complex>() * U;
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(N, N);
  for (Eigen::Index i = N - 1; i >= 0; --i) {
    for (Eigen::Index j = N - 1; j >= 0; --j) {
      Complex s = Qh(i, j);
      for (Eigen::Index k = i + 1; k < N; ++k) s += T(i, k) * Y(k, j);
      for (Eigen::Index k = j + 1; k < N; ++k) s += Y(i, k) * std::conj(T(j, k));
      Y(i, j) = -s / (T(i, i) + std::conj(T(j, j)));
    }
  }
  Eigen::MatrixXd P = (U * Y * U.adjoint()).real();
  P = 0.5 * (P + P.transpose()).eval();

  const double rhs_scale = Q.norm();
  if (rhs_scale > 0.0) {
    const double res = (A * P * E.transpose() + E * P * A.transpose() + Q).norm() / rhs_scale;
    if (res > residual_tol)
      throw numerical_error("solve_gen_lyapunov: residual " + std::to_string(res) +
                            " exceeds tolerance");
  }
  return P;
}

// Orthonormal basis for the numerical range of X; r = #{sigma_i > tol * sigma_max}.
inline Eigen::MatrixXd orth(const Eigen::MatrixXd& X, double tol = 1e-10) {
  if (X.size() == 0 || X.norm() == 0.0) throw validation_error("orth: zero input");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = tol * sv(0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > cutoff) ++r;
  Eigen::MatrixXd Q = svd.matrixU().leftCols(r);
  // deterministic sign convention
  for (Eigen::Index c = 0; c < r; ++c) {
    Eigen::Index imax;
    Q.col(c).cwiseAbs().maxCoeff(&imax);
    if (Q(imax, c) < 0.0) Q.col(c) = -Q.col(c);
  }
  return Q;
}

}  // namespace gridmor
