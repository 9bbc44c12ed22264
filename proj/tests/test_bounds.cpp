#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ngmm/bounds.hpp"
#include "ngmm/drift.hpp"
#include "ngmm/gig.hpp"
#include "support.hpp"

using namespace ngmm;

namespace {

MixedModelData identity_model() {
  Eigen::VectorXd y(2);
  y << 1.0, -0.5;
  return make_model(y, Eigen::MatrixXd::Identity(2, 2),
                    {Eigen::MatrixXd::Identity(2, 2)});
}

}  // namespace

TEST_CASE("trace bound hand case: identity design") {
  auto model = identity_model();
  TauVector tau;
  tau.tau = Eigen::VectorXd::Ones(2);
  Eigen::VectorXd lambda(2);
  lambda << 2.0, 1.0;
  const auto reports = check_lemma1(model, tau, lambda);
  REQUIRE(reports.size() == 3);
  // T = 2(I + I) = 4I: tr(X T^{-1} X') = 0.5, bound rank/lambda0 = 1
  CHECK(reports[1].lhs == doctest::Approx(0.5));
  CHECK(reports[1].rhs == doctest::Approx(1.0));
  for (const auto& r : reports) CHECK(r.passed);

  // Q >= Lambda gives tr(Z Q^{-1} Z') <= n / lambda_1 here
  CHECK(reports[2].lhs <= 2.0 / lambda[1] + 1e-12);
}

TEST_CASE("residual norm bound: ridge and zero-data cases") {
  Eigen::VectorXd y(2);
  y << 0.7, -1.1;
  auto model = make_model(y, Eigen::MatrixXd::Zero(2, 1),
                          {Eigen::MatrixXd::Identity(2, 2)});
  TauVector tau;
  tau.tau = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd lambda(2);
  lambda << 3.0, 2.0;
  const auto rep = check_lemma2(model, tau, lambda);
  CHECK(rep.passed);
  // ridge closed form: residual = (lambda1/(lambda0+lambda1))^2 ||y||^2
  const double shrink = lambda[1] / (lambda[0] + lambda[1]);
  CHECK(rep.lhs ==
        doctest::Approx(shrink * shrink * y.squaredNorm()).epsilon(1e-10));

  auto zero_model = make_model(Eigen::VectorXd::Zero(2),
                               Eigen::MatrixXd::Zero(2, 1),
                               {Eigen::MatrixXd::Identity(2, 2)});
  const auto zrep = check_lemma2(zero_model, tau, lambda);
  CHECK(zrep.lhs == 0.0);
  CHECK(zrep.rhs == 0.0);
  CHECK(zrep.passed);  // equality at the boundary
}

TEST_CASE("beta block bounds with zero design") {
  Eigen::VectorXd y(2);
  y << 1.0, 2.0;
  auto model = make_model(y, Eigen::MatrixXd::Zero(2, 1),
                          {Eigen::MatrixXd::Identity(2, 2)});
  TauVector tau;
  tau.tau = Eigen::VectorXd::Constant(1, 1.5);
  Eigen::VectorXd lambda(2);
  lambda << 2.0, 1.0;
  const auto reports = check_lemma3(model, tau, lambda, 1.0);
  REQUIRE(reports.size() == 2);
  CHECK(reports[1].lhs == doctest::Approx(0.0));  // E[beta] = 0
  for (const auto& r : reports) {
    CHECK(r.passed);
    CHECK(r.c_star_dependent);
  }
  // Var[beta] = T^{-1} = tau/lambda0 here, matching the first bound's slack
  CHECK(reports[0].lhs == doctest::Approx(tau.tau[0] / lambda[0]));
}

TEST_CASE("fractional moment bound equals the Gaussian closed form at X = 0") {
  Eigen::VectorXd y(2);
  y << 0.3, -0.8;
  auto model = make_model(y, Eigen::MatrixXd::Zero(2, 1),
                          {Eigen::MatrixXd::Identity(2, 2)});
  TauVector tau;
  tau.tau = Eigen::VectorXd::Constant(1, 2.0);
  Eigen::VectorXd lambda(2);
  lambda << 1.5, 1.0;
  const double c = 0.4;
  const double nu = drift_exponent(c);

  Rng rng(15);
  const auto rep = check_lemma4(model, tau, lambda, c, 200000, rng);
  CHECK(rep.passed);
  // beta | tau, lambda ~ N(0, tau/lambda0): the bound is an equality here
  const double sigma = std::sqrt(tau.tau[0] / lambda[0]);
  const double analytic = normal_abs_moment(-nu) * std::pow(sigma, -nu);
  CHECK(rep.rhs == doctest::Approx(analytic).epsilon(1e-10));
  // the MC estimate (lhs + 4 se) brackets the analytic value
  CHECK(rep.lhs <= analytic);
}

TEST_CASE("random effect block bounds require full rank and hold") {
  const auto inst = make_random_instance(99);
  const auto reports = check_lemma5(inst.model, inst.tau, inst.lambda);
  REQUIRE(reports.size() == 2);
  for (const auto& r : reports) CHECK(r.passed);

  // y = 0 zeroes the conditional mean bound's left side
  MixedModelData zero = inst.model;
  zero.y.setZero();
  const auto zrep = check_lemma5(zero, inst.tau, inst.lambda);
  CHECK(zrep[1].lhs == doctest::Approx(0.0));
}

TEST_CASE("tau moment bounds: half-integer case and large-argument asymptote") {
  Hyperparameters hyper;
  hyper.a = Eigen::VectorXd::Constant(2, 2.0);
  hyper.b = Eigen::VectorXd::Ones(2);
  hyper.c = 1.0;
  hyper.d = 0.5;
  ChainState state;
  state.beta = Eigen::VectorXd::Ones(1);
  state.u = Eigen::VectorXd::Zero(2);
  state.lambda = Eigen::VectorXd::Ones(2);
  auto [m1, m2] = estimate_m1_m2(hyper.c, hyper.d);

  const auto reports = check_gig_lemmas(hyper, state, 1.0, m1, m2);
  REQUIRE(reports.size() == 4);
  // E[tau] = sqrt(lambda0 beta^2 / 2d) K_{3/2}(1)/K_{1/2}(1) = 2 <= 3
  CHECK(reports[0].lhs == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(reports[0].rhs == doctest::Approx(3.0).epsilon(1e-12));
  for (const auto& r : reports) CHECK(r.passed);

  // lambda0 beta^2 = 1e4: E[tau] ~ sqrt(1e4 / (2d)) = 100
  ChainState big = state;
  big.beta[0] = 100.0;
  const auto big_reports = check_gig_lemmas(hyper, big, 1.0, m1, m2);
  CHECK(big_reports[0].lhs == doctest::Approx(100.0).epsilon(0.02));
  CHECK(big_reports[0].passed);
}

TEST_CASE("spectral preliminaries: trivial designs") {
  // X = 0 makes M the identity; both envelope sides are tight
  Eigen::VectorXd y(2);
  y << 1.0, 1.0;
  auto model0 = make_model(y, Eigen::MatrixXd::Zero(2, 1),
                           {Eigen::MatrixXd::Identity(2, 2)});
  TauVector tau;
  tau.tau = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd lambda(2);
  lambda << 1.0, 1.0;
  auto reports = check_preliminaries(model0, tau, lambda);
  REQUIRE(reports.size() == 5);
  CHECK(reports[0].lhs == doctest::Approx(0.0));  // sandwich tight
  for (const auto& r : reports) CHECK(r.passed);

  // Z = 0 zeroes the smoother entirely
  auto modelz = make_model(y, Eigen::MatrixXd::Identity(2, 2),
                           {Eigen::MatrixXd::Zero(2, 2)});
  tau.tau = Eigen::VectorXd::Ones(2);
  reports = check_preliminaries(modelz, tau, lambda);
  CHECK(reports[2].lhs == doctest::Approx(0.0));
  CHECK(reports[3].lhs == doctest::Approx(0.0));
  for (const auto& r : reports) CHECK(r.passed);
}

TEST_CASE("randomized sweep passes every lemma") {
  const auto reports = run_bounds_suite(30, 2024, 20000);
  const auto rows = summarize_bounds(reports);
  CHECK(rows.size() == 18);
  for (const auto& row : rows) {
    INFO(row.name, " min margin ", row.min_margin);
    CHECK(row.passed);
    CHECK(row.instances == 30);
  }
  // reproducible: same seed, same reports
  const auto again = run_bounds_suite(3, 2024, 5000);
  const auto reports3 = run_bounds_suite(3, 2024, 5000);
  REQUIRE(again.size() == reports3.size());
  for (size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i].lhs == reports3[i].lhs);
    CHECK(again[i].rhs == reports3[i].rhs);
  }
}
