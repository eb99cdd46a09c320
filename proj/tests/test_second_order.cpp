#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <gridmor/network.hpp>
#include <gridmor/second_order.hpp>

using namespace gridmor;

namespace {

PowerNetwork two_node(double K = 1.0, double gamma = 0.0, double B1 = 0.5) {
  PowerNetwork net;
  net.n = 2;
  net.omega_R = 2.0;
  net.nodes = {{1.0, 4.0, B1}, {2.0, 6.0, -B1}};
  net.couplings = {{0, 1, K, gamma}};
  return net;
}

}  // namespace

TEST_CASE("assembly scales inertia and damping by the reference frequency") {
  SecondOrderModel m = assemble_second_order(two_node());
  CHECK(m.Mdiag(0) == 1.0);  // 2*1/2
  CHECK(m.Mdiag(1) == 2.0);  // 2*2/2
  CHECK(m.Ddiag(0) == 2.0);  // 4/2
  CHECK(m.Ddiag(1) == 3.0);  // 6/2
  CHECK(m.Bvec(0) == 0.5);
  // default output: arithmetic mean of the angles
  REQUIRE(m.p() == 1);
  CHECK(m.Cout(0, 0) == 0.5);
  CHECK(m.Cout(0, 1) == 0.5);
}

TEST_CASE("eval_f matches the hand-evaluated coupling sums") {
  SecondOrderModel m = assemble_second_order(two_node());
  Eigen::VectorXd d(2);
  d << M_PI / 2, 0.0;
  Eigen::VectorXd f = eval_f(m, d);
  CHECK(f(0) == Catch::Approx(1.0).margin(1e-14));
  CHECK(f(1) == Catch::Approx(-1.0).margin(1e-14));

  // gamma = pi/2 at delta = 0: sin(-pi/2) = -1 in both components
  SecondOrderModel mg = assemble_second_order(two_node(1.0, M_PI / 2));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd fg = eval_f(mg, z);
  CHECK(fg(0) == Catch::Approx(-1.0).margin(1e-14));
  CHECK(fg(1) == Catch::Approx(-1.0).margin(1e-14));
}

TEST_CASE("f is invariant under uniform angle shifts") {
  PowerNetwork net = synth_network(8, Topology::Random, 3, 0.6);
  for (auto& c : net.couplings) c.gamma = 0.05;  // exercise the lossy branch too
  SecondOrderModel m = assemble_second_order(net);
  detail::FixtureRng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd d(8);
    for (int i = 0; i < 8; ++i) d(i) = rng.uniform(-1.5, 1.5);
    const double c = rng.uniform(-3.0, 3.0);
    Eigen::VectorXd shifted = d.array() + c;
    CHECK((eval_f(m, d) - eval_f(m, shifted)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("jacobian rows sum to zero and match finite differences") {
  PowerNetwork net = synth_network(6, Topology::Complete, 9);
  SecondOrderModel m = assemble_second_order(net);
  detail::FixtureRng rng(4);
  Eigen::VectorXd d(6);
  for (int i = 0; i < 6; ++i) d(i) = rng.uniform(-1.0, 1.0);

  const Eigen::MatrixXd J = jacobian_f(m, d);
  CHECK((J * Eigen::VectorXd::Ones(6)).lpNorm<Eigen::Infinity>() < 1e-12);

  const double h = 1e-6;
  for (int j = 0; j < 6; ++j) {
    Eigen::VectorXd dp = d, dm = d;
    dp(j) += h;
    dm(j) -= h;
    Eigen::VectorXd col = (eval_f(m, dp) - eval_f(m, dm)) / (2 * h);
    CHECK((J.col(j) - col).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("jacobian closed form on the symmetric two-node case") {
  SecondOrderModel m = assemble_second_order(two_node());
  Eigen::MatrixXd J = jacobian_f(m, Eigen::VectorXd::Zero(2));
  CHECK(J(0, 0) == Catch::Approx(1.0));
  CHECK(J(0, 1) == Catch::Approx(-1.0));
  CHECK(J(1, 0) == Catch::Approx(-1.0));
  CHECK(J(1, 1) == Catch::Approx(1.0));
}

TEST_CASE("equilibrium solve recovers the analytic two-node angle") {
  SecondOrderModel m = assemble_second_order(two_node());
  Eigen::VectorXd d = solve_equilibrium(m, /*gauge=*/1);
  CHECK(d(1) == 0.0);
  CHECK(d(0) == Catch::Approx(M_PI / 6).margin(1e-10));  // sin(d0) = 0.5
  CHECK((eval_f(m, d) - m.Bvec).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("zero injections give the zero equilibrium") {
  SecondOrderModel m = assemble_second_order(two_node(1.0, 0.0, 0.0));
  Eigen::VectorXd d = solve_equilibrium(m);
  CHECK(d.lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("infeasible injections are reported") {
  SecondOrderModel m = assemble_second_order(two_node(1.0, 0.0, 2.0));
  CHECK_THROWS_AS(solve_equilibrium(m), numerical_error);
}

TEST_CASE("equilibrium residual holds on synthetic networks") {
  for (unsigned seed : {1u, 7u, 19u}) {
    SecondOrderModel m = assemble_second_order(synth_network(10, Topology::Ring, seed));
    Eigen::VectorXd d = solve_equilibrium(m);
    CHECK((eval_f(m, d) - m.Bvec).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK(d(9) == 0.0);  // default gauge node
  }
}

TEST_CASE("dimension mismatches are rejected") {
  SecondOrderModel m = assemble_second_order(two_node());
  Eigen::VectorXd bad(3);
  bad.setZero();
  CHECK_THROWS_AS(eval_f(m, bad), validation_error);
  CHECK_THROWS_AS(jacobian_f(m, bad), validation_error);
  CHECK_THROWS_AS(solve_equilibrium(m, 5), validation_error);
}
