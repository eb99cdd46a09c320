#pragma once

// Q-IRKA: H2-based fixed-point iteration for quadratic systems, the reduced
// quadratic projection, and the truncated-H2-norm diagnostic built from the
// three leading Volterra kernels.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridmor/errors.hpp"
#include "gridmor/lin_solvers.hpp"
#include "gridmor/log.hpp"
#include "gridmor/quad_lift.hpp"
#include "gridmor/tensor.hpp"

namespace gridmor {

struct ReducedQuadratic {
  Eigen::MatrixXd Er, Ar;
  Eigen::MatrixXd Hr;  // r x r^2
  Eigen::MatrixXd Br;  // r x l
  Eigen::MatrixXd Cr;  // p x r
};

enum class QirkaMode { OneSided, TwoSided };

struct QirkaOptions {
  double tol = 1e-6;
  int max_iter = 50;
  std::optional<ReducedQuadratic> init;
};

struct QirkaResult {
  Eigen::MatrixXd V, W;  // 4n x r_q, real, orthonormal; one-sided => W == V
  ReducedQuadratic reduced;
  int iterations = 0;
  bool converged = false;
  bool stable_reduced = false;
  std::vector<Eigen::VectorXcd> eig_history;

  // Final-iterate internals for fixed-point certificates and the W_T
  // subspace diagnostic.
  Eigen::VectorXcd Lambda;
  Eigen::MatrixXcd Chat, Bhat;
  Eigen::MatrixXcd Hhat;            // r x r^2
  Eigen::MatrixXcd V1, V2, W1, W2;  // raw complex Sylvester solutions
  double sylvester_residuals[4] = {0, 0, 0, 0};
};

namespace detail {

// Hr (R (x) R) for dense Hr in r x r^2 layout, columns indexed (j slow, k fast).
inline Eigen::MatrixXcd reduced_tensor_congruence(const Eigen::MatrixXd& Hr,
                                                  const Eigen::MatrixXcd& R) {
  const Eigen::Index r = R.rows();
  Eigen::MatrixXcd out(Hr.rows(), r * r);
  for (Eigen::Index a = 0; a < r; ++a) {
    Eigen::MatrixXcd Ma = Eigen::MatrixXcd::Zero(Hr.rows(), r);
    for (Eigen::Index j = 0; j < r; ++j)
      Ma += R(j, a) * Hr.middleCols(j * r, r).cast<Complex>();
    out.middleCols(a * r, r) = Ma * R;
  }
  return out;
}

// Mode-2 unfolding of the dense reduced tensor: out(j, i*r + k) = hhat[i, j*r + k].
inline Eigen::MatrixXcd dense_mode2(const Eigen::MatrixXcd& Hhat) {
  const Eigen::Index r = Hhat.rows();
  Eigen::MatrixXcd out(r, r * r);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < r; ++j)
      for (Eigen::Index k = 0; k < r; ++k) out(j, i * r + k) = Hhat(i, j * r + k);
  return out;
}

// Conjugate-pair columns become (Re, Im); real-eigenvalue columns keep Re.
inline Eigen::MatrixXd realify(const Eigen::MatrixXcd& X, const Eigen::VectorXcd& Lambda) {
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    if (c + 1 < X.cols() && Lambda(c).imag() != 0.0 &&
        Lambda(c + 1) == std::conj(Lambda(c))) {
      out.col(c) = X.col(c).real();
      out.col(c + 1) = X.col(c).imag();
      ++c;
    } else {
      out.col(c) = X.col(c).real();
    }
  }
  return out;
}

inline double eig_set_distance(Eigen::VectorXcd a, Eigen::VectorXcd b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  auto sortkey = [](Eigen::VectorXcd& v) {
    std::vector<Complex> s(v.data(), v.data() + v.size());
    std::sort(s.begin(), s.end(), [](Complex x, Complex y) {
      if (x.real() != y.real()) return x.real() < y.real();
      return x.imag() < y.imag();
    });
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = s[i];
  };
  sortkey(a);
  sortkey(b);
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return (a - b).cwiseAbs().maxCoeff();
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace detail

inline ReducedQuadratic reduce_quadratic(const Eigen::MatrixXd& E, const Eigen::MatrixXd& A,
                                         const SparseTensor3& H, const Eigen::MatrixXd& B,
                                         const Eigen::MatrixXd& C, const Eigen::MatrixXd& V,
                                         const Eigen::MatrixXd& W) {
  if (V.rows() != E.rows() || W.rows() != E.rows() || V.cols() != W.cols())
    throw validation_error("reduce_quadratic: basis dimension mismatch");
  {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
    if (qr.rank() < V.cols()) throw validation_error("reduce_quadratic: rank-deficient basis V");
  }
  ReducedQuadratic red;
  red.Er = W.transpose() * E * V;
  red.Ar = W.transpose() * A * V;
  red.Hr = W.transpose() * H.mode1_apply_pairs<double>(V, V);
  red.Br = W.transpose() * B;
  red.Cr = C * V;
  return red;
}

inline ReducedQuadratic reduce_quadratic(const QuadraticModel& qm, const Eigen::MatrixXd& V,
                                         const Eigen::MatrixXd& W) {
  return reduce_quadratic(qm.Edense(), qm.Amu, qm.Htens, qm.Btil, qm.Cq, V, W);
}

// Default initial reduced model: Galerkin projection of the linear part onto
// a rational Krylov sequence at one real shift scaled by the spectral
// abscissa, (sigma E - A)^{-1} (E (sigma E - A)^{-1})^k b.
inline ReducedQuadratic qirka_default_init(const Eigen::VectorXd& Ediag, const Eigen::MatrixXd& A,
                                           const SparseTensor3& H, const Eigen::MatrixXd& B,
                                           const Eigen::MatrixXd& C, int r_q) {
  const double alpha = std::abs(spectral_abscissa(Ediag, A));
  const double sigma = alpha > 0.0 ? alpha : 1.0;
  const Eigen::MatrixXd E = Ediag.asDiagonal();
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(sigma * E - A);
  if (lu.rcond() < 1e-14) throw numerical_error("qirka: singular initial shift");
  // rational Arnoldi: orthogonalize each new direction against the basis so
  // the sequence keeps full rank even for larger r_q
  Eigen::MatrixXd X(E.rows(), r_q);
  Eigen::VectorXd v = lu.solve(B.rowwise().sum());
  for (int i = 0; i < r_q; ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < i; ++j) v -= X.col(j).dot(v) * X.col(j);
    const double nrm = v.norm();
    if (nrm < 1e-12)
      throw numerical_error("qirka: initial shifted-solve basis is rank deficient");
    X.col(i) = v / nrm;
    if (i + 1 < r_q) v = lu.solve(Ediag.cwiseProduct(X.col(i)));
  }
  const Eigen::MatrixXd V0 = X;
  return reduce_quadratic(E, A, H, B, C, V0, V0);
}

inline QirkaResult qirka(const Eigen::VectorXd& Ediag, const Eigen::MatrixXd& A,
                         const SparseTensor3& H, const Eigen::MatrixXd& B,
                         const Eigen::MatrixXd& C, int r_q, QirkaMode mode,
                         const QirkaOptions& opts = {}) {
  const Eigen::Index N = A.rows();
  if (r_q < 1 || r_q >= N) throw validation_error("qirka: require 1 <= r_q < N");
  const Eigen::MatrixXd E = Ediag.asDiagonal();
  const SparseTensor3 Hsym = H.symmetrize();

  QirkaResult res;
  ReducedQuadratic red =
      opts.init ? *opts.init : qirka_default_init(Ediag, A, Hsym, B, C, r_q);

  Eigen::VectorXcd prev_eigs;
  bool jittered = false;

  for (int it = 0; it < opts.max_iter; ++it) {
    SpectralPair sp;
    try {
      sp = spectral_decompose(red.Er, red.Ar);
    } catch (const numerical_error& e) {
      if (jittered) throw;
      log(LogLevel::Warn, std::string("qirka: ") + e.what() + "; retrying with jitter");
      red.Ar += 1e-8 * red.Ar.norm() * Eigen::MatrixXd::Identity(r_q, r_q);
      sp = spectral_decompose(red.Er, red.Ar);
      jittered = true;
    }
    res.eig_history.push_back(sp.Lambda);

    // transformed reduced quantities
    Eigen::PartialPivLU<Eigen::MatrixXcd> erlu((red.Er.cast<Complex>() * sp.R).eval());
    const Eigen::MatrixXcd Hhat =
        erlu.solve(detail::reduced_tensor_congruence(red.Hr, sp.R));
    const Eigen::MatrixXcd Bhat = erlu.solve(red.Br.cast<Complex>());
    const Eigen::MatrixXcd Chat = red.Cr.cast<Complex>() * sp.R;
    const Eigen::MatrixXcd Hhat2 = detail::dense_mode2(Hhat);

    // columnwise shifted solves; one factorization per eigenvalue, reused for
    // the transposed (W) systems
    std::vector<ShiftedSolver> solvers;
    solvers.reserve(r_q);
    try {
      for (int i = 0; i < r_q; ++i) solvers.emplace_back(E, A, sp.Lambda(i));
    } catch (const numerical_error& e) {
      if (jittered) throw;
      log(LogLevel::Warn, std::string("qirka: ") + e.what() + "; retrying with jitter");
      red.Ar += 1e-8 * red.Ar.norm() * Eigen::MatrixXd::Identity(r_q, r_q);
      jittered = true;
      --it;
      continue;
    }

    const Eigen::MatrixXcd Bc = B.cast<Complex>();
    Eigen::MatrixXcd V1(N, r_q), V2(N, r_q);
    for (int i = 0; i < r_q; ++i)
      V1.col(i) = solvers[i].solve(Bc * Bhat.row(i).transpose());
    const Eigen::MatrixXcd rhsV2 =
        Hsym.mode1_apply_pairs<Complex>(V1, V1) * Hhat.transpose();
    for (int i = 0; i < r_q; ++i) V2.col(i) = solvers[i].solve(rhsV2.col(i));

    Eigen::MatrixXcd W1, W2, rhsW2;
    if (mode == QirkaMode::TwoSided) {
      W1.resize(N, r_q);
      W2.resize(N, r_q);
      const Eigen::MatrixXcd CtChat = C.transpose().cast<Complex>() * Chat;
      for (int i = 0; i < r_q; ++i) W1.col(i) = solvers[i].solve_transposed(CtChat.col(i));
      rhsW2 = Hsym.mode2_apply_pairs<Complex>(V1, W1) * Hhat2.transpose();
      for (int i = 0; i < r_q; ++i) W2.col(i) = solvers[i].solve_transposed(rhsW2.col(i));
    } else {
      W1 = V1;
      W2 = V2;
    }

    // pad deterministically from the previous basis if realification lost rank
    auto full_rank_basis = [&](const Eigen::MatrixXd& raw, const Eigen::MatrixXd& prev,
                               const char* which) {
      Eigen::MatrixXd Q = orth(raw);
      if (Q.cols() >= r_q) return Q;
      log(LogLevel::Warn, std::string("qirka: realified ") + which + " lost rank (" +
                              std::to_string(Q.cols()) + " of " + std::to_string(r_q) + ")");
      const Eigen::MatrixXd fallback =
          prev.cols() >= r_q ? prev : Eigen::MatrixXd(Eigen::MatrixXd::Identity(N, r_q));
      Eigen::MatrixXd padded(N, Q.cols() + r_q);
      padded.leftCols(Q.cols()) = Q;
      padded.rightCols(r_q) = fallback.leftCols(r_q);
      Q = orth(padded).leftCols(r_q);
      if (Q.cols() < r_q) throw numerical_error("qirka: cannot maintain basis rank");
      return Q;
    };
    Eigen::MatrixXd V = full_rank_basis(detail::realify(V1 + V2, sp.Lambda), res.V, "V");
    Eigen::MatrixXd W = V;
    if (mode == QirkaMode::TwoSided)
      W = full_rank_basis(detail::realify(W1 + W2, sp.Lambda), res.W, "W");

    red = reduce_quadratic(E, A, Hsym, B, C, V, W);
    res.V = V;
    res.W = W;
    res.iterations = it + 1;
    res.Lambda = sp.Lambda;
    res.Chat = Chat;
    res.Bhat = Bhat;
    res.Hhat = Hhat;
    res.V1 = V1;
    res.V2 = V2;
    res.W1 = W1;
    res.W2 = W2;

    // fixed-point certificates (relative Sylvester residuals at this iterate)
    auto rel_res = [&](const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& RHS,
                       bool transposed) {
      const Eigen::MatrixXcd lhs =
          transposed
              ? (-E.transpose() * X * sp.Lambda.asDiagonal() - A.transpose().cast<Complex>() * X)
                    .eval()
              : (-E * X * sp.Lambda.asDiagonal() - A.cast<Complex>() * X).eval();
      const double denom = RHS.norm();
      return denom > 0.0 ? (lhs - RHS).norm() / denom : lhs.norm();
    };
    res.sylvester_residuals[0] = rel_res(V1, Bc * Bhat.transpose(), false);
    res.sylvester_residuals[1] = rel_res(V2, rhsV2, false);
    if (mode == QirkaMode::TwoSided) {
      res.sylvester_residuals[2] =
          rel_res(W1, C.transpose().cast<Complex>() * Chat, true);
      res.sylvester_residuals[3] = rel_res(W2, rhsW2, true);
    } else {
      res.sylvester_residuals[2] = res.sylvester_residuals[0];
      res.sylvester_residuals[3] = res.sylvester_residuals[1];
    }

    if (prev_eigs.size() == r_q) {
      const double change = detail::eig_set_distance(prev_eigs, sp.Lambda);
      if (change < opts.tol) {
        res.converged = true;
        break;
      }
    }
    prev_eigs = sp.Lambda;
  }

  if (!res.converged)
    log(LogLevel::Warn, "qirka: not converged after " + std::to_string(res.iterations) +
                            " iterations (returning last iterate)");
  try {
    const double abscissa =
        spectral_decompose(res.reduced.Er.size() ? res.reduced.Er : red.Er,
                           res.reduced.Ar.size() ? res.reduced.Ar : red.Ar)
            .Lambda.real()
            .maxCoeff();
    res.stable_reduced = abscissa < 0.0;
  } catch (const numerical_error&) {
    res.stable_reduced = false;
  }
  res.reduced = red;
  if (!res.stable_reduced)
    log(LogLevel::Warn, "qirka: reduced pencil not asymptotically stable at exit");
  return res;
}

inline QirkaResult qirka(const QuadraticModel& qm, int r_q, QirkaMode mode,
                         const QirkaOptions& opts = {}) {
  return qirka(qm.Ediag, qm.Amu, qm.Htens, qm.Btil, qm.Cq, r_q, mode, opts);
}

// Positive-semidefinite square-root factor: P ~= F F^T with negative
// eigenvalues clipped at zero. Returns F with rank columns.
inline Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& P, double rel_tol = 1e-13) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (P + P.transpose()));
  if (es.info() != Eigen::Success) throw numerical_error("psd_factor: eigen failure");
  const Eigen::VectorXd ev = es.eigenvalues();
  const double cutoff = rel_tol * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > cutoff) keep.push_back(i);
  Eigen::MatrixXd F(P.rows(), static_cast<Eigen::Index>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c)
    F.col(static_cast<Eigen::Index>(c)) =
        es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));
  return F;
}

// sqrt(tr(C (P1 + P2) C^T)) with the two-stage truncated reachability Gramian;
// the second Volterra kernel vanishes so only these two solves appear.
inline double truncated_h2_norm(const Eigen::VectorXd& Ediag, const Eigen::MatrixXd& A,
                                const SparseTensor3& H, const Eigen::MatrixXd& B,
                                const Eigen::MatrixXd& C) {
  const Eigen::MatrixXd E = Ediag.asDiagonal();
  const Eigen::MatrixXd P1 = solve_gen_lyapunov(E, A, B * B.transpose());
  Eigen::MatrixXd P2 = Eigen::MatrixXd::Zero(A.rows(), A.cols());
  if (H.nnz() > 0) {
    const Eigen::MatrixXd F = psd_factor(P1);
    if (F.cols() > 0) {
      const Eigen::MatrixXd M = H.symmetrize().mode1_apply_pairs<double>(F, F);
      const Eigen::MatrixXd Q2 = M * M.transpose();
      if (Q2.norm() > 0.0) P2 = solve_gen_lyapunov(E, A, Q2);
    }
  }
  const double tr = (C * (P1 + P2) * C.transpose()).trace();
  return std::sqrt(std::max(tr, 0.0));
}

inline double truncated_h2_norm(const QuadraticModel& qm) {
  return truncated_h2_norm(qm.Ediag, qm.Amu, qm.Htens, qm.Btil, qm.Cq);
}

}  // namespace gridmor
