// Acceptance suite: one line per criterion, nonzero exit when any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ngmm/bounds.hpp"
#include "ngmm/diagnostics.hpp"
#include "ngmm/drift.hpp"
#include "ngmm/gig.hpp"
#include "ngmm/samplers.hpp"
#include "support.hpp"

using namespace ngmm;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }
};

void report(int idx, const std::string& what, bool pass, double seconds,
            const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("[%s] criterion %d (%s): %s  [%.1fs]\n", pass ? "PASS" : "FAIL",
              idx, what.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
}

bool bitwise_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

// 1. Conditional-law equivalence on 200 random instances, rel err <= 1e-8.
void criterion1() {
  Timer t;
  double worst_cov = 0.0, worst_mean = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto inst = test::equivalence_instance(seed);
    const auto ops = build_operators(inst.model, inst.tau, inst.lambda);
    const auto mom = theta_moments(inst.model, ops, inst.lambda[0]);
    const auto [dmean, dcov] =
        test::direct_theta_moments(inst.model, inst.tau, inst.lambda);
    worst_cov = std::max(worst_cov, (mom.cov - dcov).norm() / dcov.norm());
    worst_mean =
        std::max(worst_mean, (mom.mean - dmean).norm() / dmean.norm());
  }
  const bool pass = worst_cov <= 1e-8 && worst_mean <= 1e-8 && t.seconds() < 10;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "max rel err: cov %.3g, mean %.3g (tol 1e-8, 200 instances)",
                worst_cov, worst_mean);
  report(1, "conditional-law equivalence", pass, t.seconds(), buf);
}

// 2. GIG engine: moments within 1% at 1e6 draws on 20 triples, KS < 0.01 at
//    1e5 draws, half-integer closed forms to 1e-10.
void criterion2() {
  Timer t;
  bool pass = true;
  std::string detail;

  // half-integer closed forms
  const double k_half = 0.5 * std::log(M_PI / 4.0) - 2.0;
  if (std::abs(bessel_k_log(0.5, 2.0) - k_half) > 1e-10) pass = false;
  if (std::abs(gig_moment({0.5, 1.0, 1.0}, 1.0) - 2.0) > 1e-10) pass = false;
  if (std::abs(gig_moment({-0.5, 1.0, 1.0}, 1.0) - 1.0) > 1e-10) pass = false;

  // moment agreement on 20 parameter triples at the three орders
  const double nu = drift_exponent(0.4);
  Rng param_rng(2202);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    GigParams p;
    p.zeta = -2.5 + 5.5 * param_rng.uniform();
    p.xi = std::exp(std::log(0.3) + param_rng.uniform() * std::log(5.0 / 0.3));
    p.psi = std::exp(std::log(0.3) + param_rng.uniform() * std::log(5.0 / 0.3));
    Rng rng(1000 + trial);
    const int n = 1000000;
    double s1 = 0.0, sm1 = 0.0, snu = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = gig_sample(p, rng);
      s1 += x;
      sm1 += 1.0 / x;
      snu += std::pow(x, -0.5 * nu);
    }
    const double rel1 = std::abs(s1 / n / gig_moment(p, 1.0) - 1.0);
    const double relm1 = std::abs(sm1 / n / gig_moment(p, -1.0) - 1.0);
    const double relnu =
        std::abs(snu / n / gig_moment(p, -0.5 * nu) - 1.0);
    worst_rel = std::max({worst_rel, rel1, relm1, relnu});
  }
  if (worst_rel > 0.01) pass = false;

  // KS vs quadrature CDF at 1e5 draws, including a small-omega branch case
  double worst_ks = 0.0;
  for (const GigParams p : {GigParams{-0.1, 2.0, 1.0}, GigParams{1.3, 0.7, 2.0},
                            GigParams{0.15, 2.0, 1e-5}}) {
    Rng rng(99);
    std::vector<double> draws(100000);
    for (auto& d : draws) d = gig_sample(p, rng);
    worst_ks = std::max(
        worst_ks, test::ks_distance(draws, [&](double x) {
          return std::exp(gig_log_density(p, x));
        }));
  }
  if (worst_ks > 0.01) pass = false;
  pass = pass && t.seconds() < 60;

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "worst moment rel err %.3g (tol 0.01), worst KS %.3g (tol "
                "0.01), closed forms ok",
                worst_rel, worst_ks);
  report(2, "gig engine", pass, t.seconds(), buf);
}

// 3. Geweke joint test on the tiny model: three samplers pass at |z| < 4,
//    three injected faults flagged at |z| > 6, 5e4 samples each.
void criterion3() {
  Timer t;
  auto [model, hyper] = test::tiny_model();
  const int n = 50000;
  bool pass = true;
  std::string detail;

  const std::pair<SamplerKind, const char*> kinds[] = {
      {SamplerKind::hybrid, "hybrid"},
      {SamplerKind::gibbs_deterministic, "gibbs"},
      {SamplerKind::gibbs_random_scan, "random-scan"},
  };
  for (const auto& [kind, name] : kinds) {
    SamplerConfig cfg;
    cfg.kind = kind;
    cfg.r = 0.5;
    const auto res = geweke_joint_test(model, hyper, cfg, n, 31337);
    detail += std::string(name) + " max|z|=" +
              std::to_string(res.max_abs_z).substr(0, 4) + " ";
    if (!(res.max_abs_z < 4.0)) pass = false;
  }

  const std::pair<GewekeFault, const char*> faults[] = {
      {GewekeFault::lambda0_shape, "shape"},
      {GewekeFault::gig_order, "order"},
      {GewekeFault::swapped_branches, "swap"},
  };
  SamplerConfig cfg;
  cfg.kind = SamplerKind::hybrid;
  cfg.r = 0.5;
  for (const auto& [fault, name] : faults) {
    const auto res = geweke_joint_test(model, hyper, cfg, n, 31337, fault);
    detail += std::string(name) + "|z|=" +
              std::to_string(res.max_abs_z).substr(0, 5) + " ";
    if (!(res.max_abs_z > 6.0)) pass = false;
  }
  pass = pass && t.seconds() < 300;
  report(3, "sampler correctness (geweke)", pass, t.seconds(), detail);
}

// 4. Lemma oracle suite on 200 randomized instances.
void criterion4() {
  Timer t;
  const auto reports = run_bounds_suite(200, 7, 100000);
  const auto rows = summarize_bounds(reports);
  bool pass = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::string failing;
  for (const auto& row : rows) {
    worst_margin = std::min(worst_margin, row.min_margin);
    if (!row.passed) {
      pass = false;
      failing += row.name + " ";
    }
  }
  pass = pass && t.seconds() < 120;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "%zu lemma families x 200 instances, min margin %.3g%s%s",
                rows.size(), worst_margin,
                failing.empty() ? "" : ", FAILING: ", failing.c_str());
  report(4, "lemma oracle suite", pass, t.seconds(), buf);
}

// 5. Certificate construction: every contraction coefficient < 1 on a
//    condition-passing model; threshold arithmetic matches hand values.
void criterion5() {
  Timer t;
  bool pass = true;

  auto [model, hyper] = test::tiny_model();
  Rng rng(5);
  DriftConstants constants;
  constants.c_star = estimate_c_star(model, 10000, rng);
  std::tie(constants.M1, constants.M2) = estimate_m1_m2(hyper.c, hyper.d);
  constants.estimated = true;
  const auto rep = derive_certificate(model, hyper, constants);
  double rho_star = 0.0;
  for (const auto& [name, value] : rep.rho_values) {
    if (!(value < 1.0)) pass = false;
    rho_star = std::max(rho_star, value);
  }
  if (!rep.coefficients || !(rep.coefficients->rho_star < 1.0)) pass = false;

  // hand value: n=10, p=5, rank(X)=5, c=0.5 -> threshold 3.5
  Rng mk(1);
  Eigen::MatrixXd X(10, 5), Z(10, 2);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 5; ++j) X(i, j) = mk.normal();
    for (int j = 0; j < 2; ++j) Z(i, j) = mk.normal();
  }
  Hyperparameters h2;
  h2.a = (Eigen::VectorXd(2) << 4.0, 2.0).finished();
  h2.b = Eigen::VectorXd::Ones(2);
  h2.c = 0.5;
  h2.d = 1.0;
  auto model2 = make_model(Eigen::VectorXd::Ones(10), X, {Z});
  auto rep2 = check_conditions(model2, h2);
  if (std::abs(rep2.a0_threshold - 3.5) > 1e-12) pass = false;
  if (!rep2.cond2) pass = false;  // a0 = 4 > 3.5
  h2.a[0] = 3.0;
  rep2 = check_conditions(model2, h2);
  if (rep2.cond2) pass = false;  // a0 = 3 < 3.5

  pass = pass && t.seconds() < 1.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "rho* = %.6f < 1, %zu coefficients, threshold arithmetic ok",
                rho_star, rep.rho_values.size());
  report(5, "certificate construction", pass, t.seconds(), buf);
}

// 6. Empirical one-step drift inequality at 50 random states.
void criterion6() {
  Timer t;
  auto [model, hyper] = test::tiny_model();
  Rng rng(11);
  DriftConstants constants;
  constants.c_star = estimate_c_star(model, 10000, rng);
  std::tie(constants.M1, constants.M2) = estimate_m1_m2(hyper.c, hyper.d);
  constants.estimated = true;
  const auto rep = derive_certificate(model, hyper, constants);
  const auto& co = *rep.coefficients;

  bool pass = true;
  double worst_slack = std::numeric_limits<double>::infinity();
  for (int s = 0; s < 50; ++s) {
    ChainState state;
    state.beta.resize(model.p);
    for (int j = 0; j < model.p; ++j) {
      double b = rng.normal();
      while (b == 0.0) b = rng.normal();
      state.beta[j] = b;
    }
    state.u.resize(model.q);
    for (int k = 0; k < model.q; ++k) state.u[k] = rng.normal();
    state.lambda.resize(model.m + 1);
    for (int i = 0; i <= model.m; ++i)
      state.lambda[i] =
          std::exp(std::log(0.1) + rng.uniform() * std::log(100.0));

    const double v = drift_value(model, hyper, state, co);
    const auto est =
        estimate_drift_expectation(model, hyper, state, co, 1000, rng);
    const double bound = co.rho_star * v + co.L + 4.0 * est.std_error;
    worst_slack = std::min(worst_slack, bound - est.estimate);
    if (!(est.estimate <= bound)) pass = false;
  }
  pass = pass && t.seconds() < 120;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "50 states x 1000 replicates, min slack %.3g", worst_slack);
  report(6, "empirical drift inequality", pass, t.seconds(), buf);
}

// 7. Hybrid structural invariants: one coordinate per step, admissible
//    states, bitwise seed reproducibility.
void criterion7() {
  Timer t;
  auto [model, hyper] = test::tiny_model();
  bool pass = true;

  Rng init_rng(3);
  const ChainState init = default_init(model, hyper, init_rng);
  Rng rng(17);
  ChainState s = init;
  for (int k = 0; k < 500; ++k) {
    const ChainState next = hybrid_step(model, hyper, s, 0.5, rng);
    const bool theta_same =
        bitwise_equal(next.beta, s.beta) && bitwise_equal(next.u, s.u);
    const bool lambda_same = bitwise_equal(next.lambda, s.lambda);
    if (theta_same == lambda_same) pass = false;
    s = next;
    for (int j = 0; j < model.p; ++j)
      if (!(std::abs(s.beta[j]) > 0.0)) pass = false;
  }

  SamplerConfig cfg;
  cfg.kind = SamplerKind::hybrid;
  cfg.iterations = 400;
  cfg.burnin = 100;
  cfg.seed = 271828;
  const ChainOutput a = run_chain(model, hyper, init, cfg);
  const ChainOutput b = run_chain(model, hyper, init, cfg);
  SamplerConfig cfg2 = cfg;
  cfg2.seed = 1;
  const ChainOutput c = run_chain(model, hyper, init, cfg2);
  if (a.states.size() != b.states.size()) pass = false;
  for (size_t i = 0; i < a.states.size(); ++i) {
    if (!bitwise_equal(a.states[i].beta, b.states[i].beta) ||
        !bitwise_equal(a.states[i].u, b.states[i].u) ||
        !bitwise_equal(a.states[i].lambda, b.states[i].lambda))
      pass = false;
    validate_state(model, a.states[i]);
  }
  if (bitwise_equal(a.states.back().beta, c.states.back().beta)) pass = false;

  report(7, "hybrid structural invariants", pass, t.seconds(),
         "one-coordinate updates, admissible states, bitwise seeds");
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  if (g_failures == 0)
    std::printf("acceptance: all 7 criteria passed\n");
  else
    std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
  return g_failures;
}
