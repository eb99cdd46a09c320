#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <Eigen/Dense>
#include <gridmor/network.hpp>
#include <gridmor/qirka.hpp>
#include <gridmor/quad_lift.hpp>
#include <gridmor/second_order.hpp>
#include <gridmor/strh2.hpp>

using namespace gridmor;

namespace {

QuadraticModel lifted_model(int n, Topology topo, unsigned seed, double mu = 1e-3) {
  SecondOrderModel m = assemble_second_order(synth_network(n, topo, seed));
  QuadraticSystem sys = assemble_quadratic(m);
  Eigen::VectorXd q0 = lift_state(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n));
  return shift_and_stabilize(sys, q0, mu);
}

Eigen::MatrixXd rand_mat(int r, int c, detail::FixtureRng& rng) {
  Eigen::MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = rng.uniform(-1.0, 1.0);
  return M;
}

Eigen::VectorXd kron(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  Eigen::VectorXd w(u.size() * v.size());
  for (Eigen::Index a = 0; a < u.size(); ++a)
    for (Eigen::Index b = 0; b < v.size(); ++b) w(a * v.size() + b) = u(a) * v(b);
  return w;
}

}  // namespace

TEST_CASE("reduce_quadratic with the identity basis reproduces the full model") {
  QuadraticModel qm = lifted_model(3, Topology::Ring, 4);
  const int N = qm.N();
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);
  ReducedQuadratic red = reduce_quadratic(qm, I, I);
  CHECK((red.Er - qm.Edense()).norm() < 1e-14);
  CHECK((red.Ar - qm.Amu).norm() < 1e-14);
  CHECK((red.Br - qm.Btil).norm() == 0.0);
  CHECK((red.Cr - qm.Cq).norm() == 0.0);
  REQUIRE(red.Hr.rows() == N);
  REQUIRE(red.Hr.cols() == N * N);
  CHECK((red.Hr - qm.Htens.dense_mode1()).norm() < 1e-14);
}

TEST_CASE("reduced dynamics satisfy the Petrov-Galerkin residual identity") {
  QuadraticModel qm = lifted_model(4, Topology::Complete, 2);
  const int N = qm.N(), rq = 5;
  detail::FixtureRng rng(19);
  Eigen::MatrixXd V = orth(rand_mat(N, rq, rng));
  Eigen::MatrixXd W = orth(rand_mat(N, rq, rng));
  ReducedQuadratic red = reduce_quadratic(qm, V, W);

  Eigen::VectorXd xr = rand_mat(rq, 1, rng);
  Eigen::Vector2d ut(0.7, 1.0);
  Eigen::VectorXd xdot = Eigen::PartialPivLU<Eigen::MatrixXd>(red.Er).solve(
      red.Ar * xr + red.Hr * kron(xr, xr) + red.Br * ut);
  Eigen::VectorXd full_res = qm.Edense() * V * xdot - qm.Amu * V * xr -
                             qm.Htens.mode1_apply<double>(V * xr, V * xr) - qm.Btil * ut;
  CHECK((W.transpose() * full_res).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("reduce_quadratic rejects rank-deficient bases") {
  QuadraticModel qm = lifted_model(2, Topology::Ring, 1);
  Eigen::MatrixXd V(qm.N(), 2);
  V.col(0) = Eigen::VectorXd::Ones(qm.N());
  V.col(1) = 2.0 * V.col(0);
  CHECK_THROWS_AS(reduce_quadratic(qm, V, V), validation_error);
}

TEST_CASE("with a zero tensor the iteration is linear interpolation at mirrored poles") {
  // 3-state diagonal system, 1-dim reduction; compare against a brute-force
  // search over the pole of the best single-pole approximant
  const int N = 3;
  Eigen::VectorXd Ediag = Eigen::VectorXd::Ones(N);
  Eigen::MatrixXd A = Eigen::Vector3d(-1, -2, -3).asDiagonal();
  Eigen::MatrixXd B = Eigen::MatrixXd::Ones(N, 1);
  Eigen::MatrixXd C = Eigen::MatrixXd::Ones(1, N);
  SparseTensor3 H(N);

  QirkaResult res = qirka(Ediag, A, H, B, C, 1, QirkaMode::TwoSided);
  REQUIRE(res.converged);
  CHECK(res.V2.norm() == 0.0);
  CHECK(res.W2.norm() == 0.0);
  const double pole = res.reduced.Ar(0, 0) / res.reduced.Er(0, 0);

  // transfer function G(s) = sum_i 1/(s + a_i); H2 error of k/(s + p):
  // err^2 = ||G||^2 + k^2/(2p) - 2 k G(p), minimized by k*(p) = 2 p G(p)
  const double a[3] = {1, 2, 3};
  auto G = [&](double s) { return 1 / (s + a[0]) + 1 / (s + a[1]) + 1 / (s + a[2]); };
  double g2 = 0.0;
  for (double ai : a)
    for (double aj : a) g2 += 1.0 / (ai + aj);
  double best_p = 0.0, best_err = 1e100;
  for (double p = 0.05; p <= 5.0; p += 1e-5) {
    const double k = 2.0 * p * G(p);
    const double err = g2 + k * k / (2.0 * p) - 2.0 * k * G(p);
    if (err < best_err) {
      best_err = err;
      best_p = p;
    }
  }
  CHECK(std::abs(-pole - best_p) / best_p < 1e-3);
}

TEST_CASE("converged two-sided run leaves small fixed-point residuals") {
  QuadraticModel qm = lifted_model(12, Topology::Complete, 3);
  QirkaResult res = qirka(qm, 6, QirkaMode::TwoSided);
  REQUIRE(res.converged);
  for (double r : res.sylvester_residuals) CHECK(r <= 1e-8);

  // orthonormal bases
  const Eigen::MatrixXd IV = res.V.transpose() * res.V;
  const Eigen::MatrixXd IW = res.W.transpose() * res.W;
  CHECK((IV - Eigen::MatrixXd::Identity(6, 6)).norm() <= 1e-12);
  CHECK((IW - Eigen::MatrixXd::Identity(6, 6)).norm() <= 1e-12);

  // every iterate's eigenvalue set is closed under conjugation
  for (const auto& lam : res.eig_history) {
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
      if (lam(i).imag() == 0.0) continue;
      bool found = false;
      for (Eigen::Index j = 0; j < lam.size(); ++j)
        if (std::abs(lam(j) - std::conj(lam(i))) <= 1e-10 * (1.0 + std::abs(lam(i))))
          found = true;
      CHECK(found);
    }
  }

  // realified basis spans the complex Sylvester solutions
  const Eigen::MatrixXd raw = detail::realify(res.V1 + res.V2, res.Lambda);
  CHECK(max_principal_angle(res.V, raw) <= 1e-10);
}

TEST_CASE("one-sided mode returns identical test and trial bases") {
  QuadraticModel qm = lifted_model(8, Topology::Ring, 6);
  QirkaResult res = qirka(qm, 4, QirkaMode::OneSided);
  CHECK((res.V - res.W).norm() == 0.0);
  CHECK((res.V.transpose() * res.V - Eigen::MatrixXd::Identity(4, 4)).norm() <= 1e-12);
}

TEST_CASE("qirka validates the reduction order") {
  QuadraticModel qm = lifted_model(2, Topology::Ring, 1);
  CHECK_THROWS_AS(qirka(qm, 0, QirkaMode::TwoSided), validation_error);
  CHECK_THROWS_AS(qirka(qm, 8, QirkaMode::TwoSided), validation_error);
}

TEST_CASE("truncated H2 norm closed forms") {
  SECTION("scalar linear system") {
    Eigen::VectorXd E = Eigen::VectorXd::Ones(1);
    Eigen::MatrixXd A = -Eigen::MatrixXd::Ones(1, 1);
    Eigen::MatrixXd B = Eigen::MatrixXd::Ones(1, 1);
    Eigen::MatrixXd C = Eigen::MatrixXd::Ones(1, 1);
    CHECK(std::abs(truncated_h2_norm(E, A, SparseTensor3(1), B, C) - std::sqrt(0.5)) <= 1e-12);
  }
  SECTION("zero input matrix gives zero norm") {
    QuadraticModel qm = lifted_model(3, Topology::Ring, 2);
    qm.Btil.setZero();
    CHECK(truncated_h2_norm(qm) == 0.0);
  }
}

TEST_CASE("with a zero tensor the truncated norm is the classical H2 norm") {
  // independent oracle: Lyapunov equation solved by dense Kronecker vectorization
  detail::FixtureRng rng(29);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 8;
    Eigen::MatrixXd X = rand_mat(n, n, rng);
    Eigen::MatrixXd R = rand_mat(n, n, rng);
    Eigen::MatrixXd A =
        -X * X.transpose() - 0.1 * Eigen::MatrixXd::Identity(n, n) + 0.5 * (R - R.transpose());
    Eigen::MatrixXd B = rand_mat(n, 1, rng);
    Eigen::MatrixXd C = rand_mat(1, n, rng);

    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          K(i * n + j, i * n + k) += A(j, k);  // vec(A P)
          K(j * n + i, k * n + i) += A(j, k);  // vec(P A^T)
        }
    Eigen::MatrixXd Q = B * B.transpose();
    Eigen::VectorXd vecQ(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) vecQ(i * n + j) = Q(j, i);
    Eigen::VectorXd vecP = Eigen::PartialPivLU<Eigen::MatrixXd>(K).solve(-vecQ);
    Eigen::MatrixXd P(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) P(j, i) = vecP(i * n + j);
    const double oracle = std::sqrt((C * P * C.transpose()).trace());

    const double got =
        truncated_h2_norm(Eigen::VectorXd::Ones(n), A, SparseTensor3(n), B, C);
    CHECK(std::abs(got - oracle) <= 1e-10 * oracle);
  }
}

TEST_CASE("psd_factor reconstructs and clips") {
  detail::FixtureRng rng(41);
  Eigen::MatrixXd G = rand_mat(6, 3, rng);
  Eigen::MatrixXd P = G * G.transpose();
  Eigen::MatrixXd F = psd_factor(P);
  CHECK(F.cols() == 3);
  CHECK((F * F.transpose() - P).norm() < 1e-12 * P.norm());
  // a slightly indefinite perturbation is clipped, not propagated
  Eigen::MatrixXd Pneg = P - 1e-3 * Eigen::MatrixXd::Identity(6, 6);
  Eigen::MatrixXd Fn = psd_factor(Pneg);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Fn * Fn.transpose());
  CHECK(es.eigenvalues().minCoeff() >= -1e-14);
}
