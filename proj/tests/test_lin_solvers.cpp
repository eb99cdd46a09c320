#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <gridmor/lin_solvers.hpp>
#include <gridmor/network.hpp>

using namespace gridmor;

namespace {

Eigen::MatrixXd rand_mat(int r, int c, detail::FixtureRng& rng) {
  Eigen::MatrixXd M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = rng.uniform(-1.0, 1.0);
  return M;
}

// random stable matrix: negative-definite symmetric part plus skew part
Eigen::MatrixXd stable_mat(int n, detail::FixtureRng& rng) {
  Eigen::MatrixXd X = rand_mat(n, n, rng);
  Eigen::MatrixXd R = rand_mat(n, n, rng);
  return -X * X.transpose() - 0.1 * Eigen::MatrixXd::Identity(n, n) +
         0.5 * (R - R.transpose());
}

}  // namespace

TEST_CASE("shifted solve on a scalar-diagonal system") {
  const int n = 4;
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd A = -2.0 * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXcd b = Eigen::VectorXcd::Ones(n);
  // (-lambda E - A) = (1 + 2) I = 3 I at lambda = -1
  Eigen::VectorXcd x = solve_shifted(E, A, Complex(-1.0, 0.0), b);
  CHECK((x - b / 3.0).norm() < 1e-14);
}

TEST_CASE("shift at a generalized eigenvalue is singular") {
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd A(2, 2);
  A << -1, 0, 0, -2;
  // -lambda E - A = diag(0, 1) at lambda = 1
  CHECK_THROWS_AS(solve_shifted(E, A, Complex(1.0, 0.0), Eigen::VectorXcd::Ones(2)),
                  numerical_error);
}

TEST_CASE("shifted solve residual and conjugation symmetry") {
  detail::FixtureRng rng(17);
  const int n = 12;
  Eigen::MatrixXd S = rand_mat(n, n, rng);
  Eigen::MatrixXd E = S * S.transpose() + Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd A = stable_mat(n, rng);
  Eigen::VectorXcd b(n);
  for (int i = 0; i < n; ++i) b(i) = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
  const Complex lam(-0.4, 1.3);
  Eigen::VectorXcd x = solve_shifted(E, A, lam, b);
  const Eigen::MatrixXcd M = -lam * E.cast<Complex>() - A.cast<Complex>();
  CHECK((M * x - b).norm() / b.norm() < 1e-12);
  Eigen::VectorXcd xc = solve_shifted(E, A, std::conj(lam), b.conjugate());
  CHECK((xc - x.conjugate()).norm() < 1e-10);
}

TEST_CASE("spectral decomposition of a diagonal pencil") {
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd A(2, 2);
  A << -1, 0, 0, -2;
  SpectralPair sp = spectral_decompose(E, A);
  // sorted by real part
  CHECK(sp.Lambda(0).real() == Catch::Approx(-2.0));
  CHECK(sp.Lambda(1).real() == Catch::Approx(-1.0));
  CHECK((A.cast<Complex>() * sp.R - E.cast<Complex>() * sp.R * sp.Lambda.asDiagonal()).norm() <
        1e-10 * A.norm());
}

TEST_CASE("conjugate eigenvalue pairs come out adjacent and exactly conjugate") {
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd A(2, 2);
  A << -1, -2, 2, -1;  // eigenvalues -1 +- 2i
  SpectralPair sp = spectral_decompose(E, A);
  CHECK(sp.Lambda(0) == std::conj(sp.Lambda(1)));
  CHECK(sp.Lambda(0).real() == Catch::Approx(-1.0));
  CHECK(std::abs(sp.Lambda(0).imag()) == Catch::Approx(2.0));
  CHECK((sp.R.col(1) - sp.R.col(0).conjugate()).norm() == 0.0);
}

TEST_CASE("spectral decomposition residual on random stable pencils") {
  detail::FixtureRng rng(9);
  for (int trial = 0; trial < 4; ++trial) {
    const int r = 6;
    Eigen::MatrixXd S = rand_mat(r, r, rng);
    Eigen::MatrixXd E = S * S.transpose() + Eigen::MatrixXd::Identity(r, r);
    Eigen::MatrixXd A = stable_mat(r, rng);
    SpectralPair sp = spectral_decompose(E, A);
    const double res =
        (A.cast<Complex>() * sp.R - E.cast<Complex>() * sp.R * sp.Lambda.asDiagonal()).norm();
    CHECK(res <= 1e-10 * A.norm());
    // deterministic ordering
    for (int i = 0; i + 1 < r; ++i) CHECK(sp.Lambda(i).real() <= sp.Lambda(i + 1).real() + 1e-14);
  }
}

TEST_CASE("lyapunov solve on closed-form cases") {
  SECTION("E=I, A=-I, Q=I gives P=I/2") {
    const int n = 5;
    Eigen::MatrixXd P = solve_gen_lyapunov(Eigen::MatrixXd::Identity(n, n),
                                           -Eigen::MatrixXd::Identity(n, n),
                                           Eigen::MatrixXd::Identity(n, n));
    CHECK((P - 0.5 * Eigen::MatrixXd::Identity(n, n)).norm() < 1e-12);
  }
  SECTION("scalar e=2, a=-3, q=12 gives p=1") {
    Eigen::MatrixXd E(1, 1), A(1, 1), Q(1, 1);
    E << 2;
    A << -3;
    Q << 12;
    Eigen::MatrixXd P = solve_gen_lyapunov(E, A, Q);
    CHECK(P(0, 0) == Catch::Approx(1.0).margin(1e-13));
  }
}

TEST_CASE("lyapunov plug-back residual on random stable systems") {
  detail::FixtureRng rng(13);
  for (int trial = 0; trial < 3; ++trial) {
    const int n = 10;
    Eigen::MatrixXd S = rand_mat(n, n, rng);
    Eigen::MatrixXd E = S * S.transpose() + Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd A = stable_mat(n, rng) * E;  // keeps (E, A) stable
    Eigen::MatrixXd G = rand_mat(n, 2, rng);
    Eigen::MatrixXd Q = G * G.transpose();
    Eigen::MatrixXd P = solve_gen_lyapunov(E, A, Q);
    CHECK((P - P.transpose()).norm() == 0.0);
    CHECK((A * P * E.transpose() + E * P * A.transpose() + Q).norm() / Q.norm() < 1e-8);
  }
}

TEST_CASE("unstable pencils are rejected by the lyapunov solver") {
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd A(2, 2);
  A << 1, 0, 0, -1;
  CHECK_THROWS_AS(solve_gen_lyapunov(E, A, Eigen::MatrixXd::Identity(2, 2)), numerical_error);
}

TEST_CASE("orth collapses rank deficiency and reproduces the range") {
  SECTION("duplicate column") {
    Eigen::MatrixXd X(3, 2);
    X.col(0) = Eigen::Vector3d(1, 0, 0);
    X.col(1) = Eigen::Vector3d(1, 0, 0);
    Eigen::MatrixXd Q = orth(X);
    REQUIRE(Q.cols() == 1);
    CHECK(std::abs(std::abs(Q(0, 0)) - 1.0) < 1e-14);
  }
  SECTION("constructed rank 3") {
    detail::FixtureRng rng(31);
    Eigen::MatrixXd B = rand_mat(10, 3, rng);
    Eigen::MatrixXd X(10, 5);
    X.leftCols(3) = B;
    X.col(3) = B.col(0) + 2.0 * B.col(1);
    X.col(4) = B.col(2) - B.col(0);
    Eigen::MatrixXd Q = orth(X);
    REQUIRE(Q.cols() == 3);
    CHECK((Q.transpose() * Q - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);
    CHECK(((Eigen::MatrixXd::Identity(10, 10) - Q * Q.transpose()) * X).norm() <
          1e-10 * X.norm());
  }
  SECTION("zero input rejected") {
    CHECK_THROWS_AS(orth(Eigen::MatrixXd::Zero(4, 2)), validation_error);
  }
}

TEST_CASE("orth of an orthonormal matrix keeps the same projector") {
  detail::FixtureRng rng(44);
  Eigen::MatrixXd X = orth(rand_mat(8, 4, rng));
  Eigen::MatrixXd Q = orth(X);
  CHECK((Q * Q.transpose() - X * X.transpose()).norm() < 1e-12);
}
