#include "doctest.h"

#include <cmath>
#include <random>

#include "gtopo/batch_solver.hpp"
#include "gtopo/random.hpp"

using namespace gtopo;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Group-lasso instance and its minimizers from an independent solver.
const double kRss[] = {
    0.45794070156453148, 0.085226164892748937, 0.029318726261934182,
    0.10565826922017979, 0.17062202431261989, 0.19373556227680799,
    0.085226164892748937, 0.56572734771404332, -0.41324627302081712,
    -0.21904337399533846, 0.22476525526003821, 0.080441782457992481,
    0.029318726261934182, -0.41324627302081712, 0.66291834689024642,
    0.41157622270046751, -0.016189052657753496, -0.21784372895574358,
    0.10565826922017979, -0.21904337399533846, 0.41157622270046751,
    1.8341360356160388, 0.79951521379915469, 0.65897425358003336,
    0.17062202431261989, 0.22476525526003821, -0.016189052657753496,
    0.79951521379915469, 1.2164958045461676, 0.43415219542119793,
    0.19373556227680799, 0.080441782457992481, -0.21784372895574358,
    0.65897425358003336, 0.43415219542119793, 1.0931498434347062};
const double kRsy[] = {
    -0.032521704945520598, 0.88438986738317393, -0.58360043274330198,
    -0.11170194958415963, 0.11046414324948059, 0.063781774255061957};
const double kR0[] = {
    0.72215564966418611, 0.44025191038849837, 0.035127798252721304,
    0.13381177416550177, -0.14052422519426269, 0.097362527128126417,
    0.44025191038849837, 0.75228976767120592, 0.039313663426787521,
    0.034152634844874935, 0.061969062437176377, -0.00034042015456983986,
    0.035127798252721304, 0.039313663426787521, 0.38639063437232796,
    -0.20623787415823175, 0.27189063099096478, 0.019524297277796351,
    0.13381177416550177, 0.034152634844874935, -0.20623787415823175,
    0.22840338893527037, 0.049231994735672545, -0.049513754371379178,
    -0.14052422519426269, 0.061969062437176377, 0.27189063099096478,
    0.049231994735672545, 0.98785698732856408, -0.24628187248191138,
    0.097362527128126417, -0.00034042015456983986, 0.019524297277796351,
    -0.049513754371379178, -0.24628187248191138, 0.2802524747818867};
const double kR1[] = {
    0.31089680589021823, -0.13066954785456322, 0.086438010241028068,
    0.24368502153188346, 0.4374741012358479, -0.12034026442678163,
    -0.13066954785456322, 0.36259358826853705, -0.091993572575179108,
    -0.016895444456907181, -0.18725708230529289, -0.13684475876614141,
    0.086438010241028068, -0.091993572575179108, 0.22335126877956099,
    -0.20312563407127707, 0.15656755096092362, 0.014918925051020446,
    0.24368502153188346, -0.016895444456907181, -0.20312563407127707,
    1.0757517056772037, 0.30380773421939888, -0.18908517877602959,
    0.4374741012358479, -0.18725708230529289, 0.15656755096092362,
    0.30380773421939888, 0.71468528534054876, -0.18346774206879049,
    -0.12034026442678163, -0.13684475876614141, 0.014918925051020446,
    -0.18908517877602959, -0.18346774206879049, 0.21244888471115347};
const double kGamma005[] = {-0.34274146773022585, 1.8183406748064481,
                            0.047291384416139927, 0.34743378438356903,
                            -0.38006867375265907, -0.057400607742046757};
const double kGamma05[] = {-0.054968389167841587, 0.23791492201418726,
                           -0.26812546236445745, -0.0729726986352527,
                           0.12348726342544247, 0.081139055983163247};

BatchProblem reference_problem(double eta) {
  BatchProblem p;
  p.r_ss = Eigen::Map<const MatrixXd>(kRss, 6, 6);
  p.r_sy = Eigen::Map<const VectorXd>(kRsy, 6);
  p.eta = eta;
  p.c.push_back(factor_Rtt(Eigen::Map<const MatrixXd>(kR0, 6, 6)));
  p.c.push_back(factor_Rtt(Eigen::Map<const MatrixXd>(kR1, 6, 6)));
  return p;
}

MatrixXd random_psd(Rng& rng, int n, int rank) {
  std::normal_distribution<double> d;
  MatrixXd a(n, rank);
  for (int i = 0; i < a.size(); ++i) a.data()[i] = d(rng);
  return a * a.transpose();
}

}  // namespace

TEST_CASE("factor_Rtt") {
  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  const MatrixXd c = factor_Rtt(d);
  CHECK(c(0, 0) == doctest::Approx(2.0));
  CHECK(c(1, 1) == doctest::Approx(3.0));
  CHECK(c(0, 1) == 0.0);
  CHECK(factor_Rtt(MatrixXd::Identity(3, 3)).isApprox(MatrixXd::Identity(3, 3)));

  Rng rng(5);
  for (int rank : {7, 3}) {
    const MatrixXd r = random_psd(rng, 7, rank);
    const MatrixXd f = factor_Rtt(r);
    CHECK((f * f.transpose() - r).norm() <= 1e-12 * r.norm());
  }
}

TEST_CASE("trivial problems") {
  BatchProblem p;
  p.r_ss = MatrixXd::Identity(4, 4);
  p.r_sy = VectorXd::LinSpaced(4, -1.0, 2.0);
  p.c = {MatrixXd::Identity(4, 4)};
  const SolveReport plain = solve_gamma_star(p);
  CHECK(plain.converged);
  CHECK((plain.gamma - p.r_sy).norm() <= 1e-12);

  // eta >= ||r_sy|| puts the single group at zero.
  p.eta = 10.0;
  const SolveReport zero = solve_gamma_star(p);
  CHECK(zero.converged);
  CHECK(zero.gamma.norm() <= 1e-9);

  // One identity group: the solution is the shrunk b.
  p.eta = 0.5;
  const SolveReport shrunk = solve_gamma_star(p);
  const VectorXd expect = p.r_sy * (1.0 - p.eta / p.r_sy.norm());
  CHECK((shrunk.gamma - expect).norm() <= 1e-8);
}

TEST_CASE("reference instance") {
  for (const auto& [eta, want] :
       {std::pair{0.05, kGamma005}, std::pair{0.5, kGamma05}}) {
    CAPTURE(eta);
    const BatchProblem p = reference_problem(eta);
    const SolveReport r = solve_gamma_star(p);
    REQUIRE(r.converged);
    const VectorXd g = Eigen::Map<const VectorXd>(want, 6);
    CHECK((r.gamma - g).norm() <= 1e-6);
    CHECK(kkt_residual(p, r.gamma) <= 1e-6);
    CHECK(r.objective == doctest::Approx(objective(p, g)).epsilon(1e-12));

    // No small perturbation improves on the solution.
    Rng rng(99);
    std::normal_distribution<double> n;
    const double f0 = objective(p, r.gamma);
    for (int k = 0; k < 100; ++k) {
      VectorXd d = VectorXd::NullaryExpr(6, [&] { return n(rng); });
      d *= 1e-4 / d.norm();
      CHECK(objective(p, r.gamma + d) >= f0 - 1e-14);
    }

    const SolveReport ref = solve_gamma_star_reference(p, 1e-10, 200000);
    CHECK((ref.gamma - g).norm() <= 1e-5);
  }
}

TEST_CASE("eta = 0: direct and iterative agree") {
  const BatchProblem p = reference_problem(0.0);
  const SolveReport direct = solve_gamma_star(p);
  SolverOptions opt;
  opt.force_iterative = true;
  const SolveReport iter = solve_gamma_star(p, opt);
  REQUIRE(iter.converged);
  CHECK((direct.gamma - iter.gamma).norm() <= 1e-6);
  CHECK((direct.gamma - p.r_ss.ldlt().solve(p.r_sy)).norm() <= 1e-10);
}

TEST_CASE("solver is deterministic") {
  const BatchProblem p = reference_problem(0.05);
  const SolveReport a = solve_gamma_star(p);
  const SolveReport b = solve_gamma_star(p);
  CHECK(a.gamma == b.gamma);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("kkt residual") {
  const BatchProblem p = reference_problem(0.5);
  // At zero every group is idle, so the residual is the distance from
  // r_sy to the sum of the scaled balls; here that is positive.
  CHECK(kkt_residual(p, VectorXd::Zero(6)) > 0.0);
  BatchProblem big = p;
  big.eta = 100.0;
  CHECK(kkt_residual(big, VectorXd::Zero(6)) <= 1e-9);
}

TEST_CASE("bad input") {
  BatchProblem p = reference_problem(0.05);
  p.c[0] = MatrixXd::Identity(5, 5);
  CHECK_THROWS(solve_gamma_star(p));
}
