#include "ngmm/bounds.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>

#include "ngmm/conditionals.hpp"
#include "ngmm/drift.hpp"
#include "ngmm/gig.hpp"

namespace ngmm {

BoundReport make_report(const std::string& name, double lhs, double rhs) {
  BoundReport rep;
  rep.name = name;
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.margin = rhs - lhs;
  rep.passed = lhs <= rhs + 1e-9 * (1.0 + std::abs(rhs));
  return rep;
}

namespace {

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * (std::log(hi) - std::log(lo)));
}

void stamp(std::vector<BoundReport>& reports, const RandomInstance& inst) {
  for (auto& r : reports) {
    r.seed = inst.seed;
    r.n = inst.model.n;
    r.p = inst.model.p;
    r.q = inst.model.q;
  }
}

Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& mat) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

double min_eig(const Eigen::MatrixXd& mat) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eig(const Eigen::MatrixXd& mat) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double s_max_of(const Eigen::MatrixXd& mat) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

int rank_of(const Eigen::MatrixXd& mat) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
  const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  const double thresh =
      mat.cols() * smax * std::numeric_limits<double>::epsilon();
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > thresh) ++rank;
  return rank;
}

}  // namespace

RandomInstance make_random_instance(std::uint64_t seed) {
  Rng rng(seed);
  RandomInstance inst;
  inst.seed = seed;

  const int m = 1 + static_cast<int>(rng.integer() % 2);
  std::vector<int> q_sizes(m);
  int q = 0;
  for (int i = 0; i < m; ++i) {
    q_sizes[i] = 2 + static_cast<int>(rng.integer() % 2);  // 2 or 3
    q += q_sizes[i];
  }
  const int n = q + static_cast<int>(rng.integer() % (8 - q + 1));  // [q, 8]
  const int p = 2 + static_cast<int>(rng.integer() % 7);            // [2, 8]

  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
  std::vector<Eigen::MatrixXd> Z_blocks;
  for (int b = 0; b < m; ++b) {
    Eigen::MatrixXd Zi(n, q_sizes[b]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < q_sizes[b]; ++j) Zi(i, j) = rng.normal();
    Z_blocks.push_back(Zi);
  }
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y[i] = std::sqrt(double(n)) * rng.normal();
  inst.model = make_model(y, X, Z_blocks);

  inst.tau.tau.resize(p);
  for (int j = 0; j < p; ++j) inst.tau.tau[j] = log_uniform(rng, 1e-3, 1e3);
  inst.lambda.resize(m + 1);
  for (int i = 0; i <= m; ++i) inst.lambda[i] = log_uniform(rng, 1e-3, 1e3);

  inst.hyper.a = Eigen::VectorXd::Constant(m + 1, 2.0);
  inst.hyper.b = Eigen::VectorXd::Constant(m + 1, 1.0);
  inst.hyper.c = log_uniform(rng, 0.1, 4.0);
  inst.hyper.d = log_uniform(rng, 0.1, 10.0);

  inst.state.beta.resize(p);
  for (int j = 0; j < p; ++j) {
    double b = rng.normal();
    while (b == 0.0) b = rng.normal();
    inst.state.beta[j] = b;
  }
  inst.state.u.resize(q);
  for (int k = 0; k < q; ++k) inst.state.u[k] = rng.normal();
  inst.state.lambda = inst.lambda;
  return inst;
}

std::vector<BoundReport> check_lemma1(const MixedModelData& model,
                                      const TauVector& tau,
                                      const Eigen::VectorXd& lambda) {
  const auto ops = build_operators(model, tau, lambda);
  const auto mom = theta_moments(model, ops, lambda[0]);
  const int q = model.q;
  const Eigen::MatrixXd Qinv =
      ops.chol_Q.solve(Eigen::MatrixXd::Identity(q, q));
  const double tr_xt = (model.X * ops.chol_T.solve(model.X.transpose())).trace();
  const double tr_zq = (model.Z * Qinv * model.Z.transpose()).trace();
  const double tr_wvw =
      (model.W * mom.cov * model.W.transpose()).trace();
  const double sum_inv_lambda = lambda.tail(model.m).cwiseInverse().sum();
  return {
      make_report("lemma1.1", tr_wvw, tr_xt + tr_zq),
      make_report("lemma1.2", tr_xt, rank_of(model.X) / lambda[0]),
      make_report("lemma1.3", tr_zq, model.Z.squaredNorm() * sum_inv_lambda),
  };
}

BoundReport check_lemma2(const MixedModelData& model, const TauVector& tau,
                         const Eigen::VectorXd& lambda) {
  const auto ops = build_operators(model, tau, lambda);
  const auto mom = theta_moments(model, ops, lambda[0]);
  const double lhs = (model.y - model.W * mom.mean).squaredNorm();
  const double y2 = model.y.squaredNorm();
  const double n = model.n;
  return make_report("lemma2", lhs, 2.0 * n * y2 + 2.0 * n * n * n * y2);
}

std::vector<BoundReport> check_lemma3(const MixedModelData& model,
                                      const TauVector& tau,
                                      const Eigen::VectorXd& lambda,
                                      double c_star) {
  const auto ops = build_operators(model, tau, lambda);
  const auto mom = theta_moments(model, ops, lambda[0]);
  const int p = model.p;
  const double sum_inv_lambda = lambda.tail(model.m).cwiseInverse().sum();
  const double s2 = std::pow(s_max_of(model.X), 2);
  const double y2 = model.y.squaredNorm();
  const double n2 = double(model.n) * model.n;

  auto r1 = make_report(
      "lemma3.1", mom.cov.topLeftCorner(p, p).trace(),
      tau.tau.sum() / lambda[0] + c_star * model.Z.squaredNorm() * sum_inv_lambda);
  auto r2 = make_report("lemma3.2", mom.mean.head(p).squaredNorm(),
                        c_star * n2 * y2 * (s2 * tau.tau.sum() + 1.0));
  r1.c_star_dependent = r2.c_star_dependent = true;
  return {r1, r2};
}

BoundReport check_lemma4(const MixedModelData& model, const TauVector& tau,
                         const Eigen::VectorXd& lambda, double c, int n_draws,
                         Rng& rng) {
  const auto ops = build_operators(model, tau, lambda);
  const auto mom = theta_moments(model, ops, lambda[0]);
  const double nu = drift_exponent(c);
  const double kappa = normal_abs_moment(-nu);

  double mean = 0.0, m2 = 0.0;
  for (int k = 0; k < n_draws; ++k) {
    auto [beta, u] = sample_theta(mom, rng);
    double s = 0.0;
    for (int j = 0; j < model.p; ++j)
      s += std::pow(std::abs(beta[j]), -nu);
    const double delta = s - mean;
    mean += delta / (k + 1);
    m2 += delta * (s - mean);
  }
  const double se = std::sqrt(m2 / (n_draws - 1.0) / n_draws);

  const double s_max = s_max_of(model.X);
  const double l0nu = std::pow(lambda[0], 0.5 * nu);
  double rhs = model.p * kappa * std::pow(s_max, nu) * l0nu;
  for (int j = 0; j < model.p; ++j)
    rhs += kappa * l0nu * std::pow(tau.tau[j], -0.5 * nu);
  // Monte Carlo lhs compared at the 4-standard-error level
  return make_report("lemma4(mc-4se)", mean - 4.0 * se, rhs);
}

std::vector<BoundReport> check_lemma5(const MixedModelData& model,
                                      const TauVector& tau,
                                      const Eigen::VectorXd& lambda) {
  const auto ops = build_operators(model, tau, lambda);
  const auto mom = theta_moments(model, ops, lambda[0]);
  const int q = model.q;
  const Eigen::MatrixXd Qinv =
      ops.chol_Q.solve(Eigen::MatrixXd::Identity(q, q));
  const Eigen::MatrixXd ztz = model.Z.transpose() * model.Z;
  const double tr_ztz_inv =
      Eigen::LLT<Eigen::MatrixXd>(ztz)
          .solve(Eigen::MatrixXd::Identity(q, q))
          .trace();
  const double s2 = std::pow(s_max_of(model.X), 2);
  const double y2 = model.y.squaredNorm();
  const double n3 = std::pow(double(model.n), 3);

  BoundReport worst1, worst2;
  for (int i = 0; i < model.m; ++i) {
    const int qi = model.q_sizes[i], off = model.q_offsets[i];
    auto r1 = make_report("lemma5.1", Qinv.block(off, off, qi, qi).trace(),
                          qi / lambda[i + 1]);
    auto r2 = make_report(
        "lemma5.2",
        mom.mean.segment(model.p + off, qi).squaredNorm(),
        qi * tr_ztz_inv * n3 * y2 * (s2 * tau.tau.sum() + 1.0));
    if (i == 0 || r1.margin < worst1.margin) worst1 = r1;
    if (i == 0 || r2.margin < worst2.margin) worst2 = r2;
  }
  return {worst1, worst2};
}

std::vector<BoundReport> check_gig_lemmas(const Hyperparameters& hyper,
                                          const ChainState& state, double C,
                                          double M1, double M2) {
  const double c = hyper.c, d = hyper.d;
  const double nu = drift_exponent(c);
  const double lambda0 = state.lambda[0];
  BoundReport worst[4];
  for (int j = 0; j < state.beta.size(); ++j) {
    const double b2 = state.beta[j] * state.beta[j];
    const GigParams gp{c - 0.5, 2.0 * d, lambda0 * b2};
    const double e_tau = gig_moment(gp, 1.0);
    const double e_inv = gig_moment(gp, -1.0);
    const double e_frac = gig_moment(gp, -0.5 * nu);
    BoundReport reps[4] = {
        make_report("lemma6.1", e_tau,
                    (4.0 * c + 1.0) / (4.0 * d) + 0.5 * lambda0 * b2),
        make_report("lemma6.2", e_tau,
                    c / d + b2 / (2.0 * C) + lambda0 * C / (4.0 * d)),
        make_report("lemma7", e_inv, d + 1.5 / (lambda0 * b2)),
        make_report("lemma8", e_frac,
                    M1 / (std::pow(lambda0, 0.5 * nu) * std::pow(std::abs(state.beta[j]), nu)) +
                        M2),
    };
    for (int k = 0; k < 4; ++k)
      if (j == 0 || reps[k].margin < worst[k].margin) worst[k] = reps[k];
  }
  return {worst[0], worst[1], worst[2], worst[3]};
}

std::vector<BoundReport> check_preliminaries(const MixedModelData& model,
                                             const TauVector& tau,
                                             const Eigen::VectorXd& lambda) {
  const auto ops = build_operators(model, tau, lambda);
  const int n = model.n;
  const double s2 = std::pow(s_max_of(model.X), 2);
  const double tau_max = tau.tau.maxCoeff();

  const double lower = 1.0 / (tau_max * s2 + 1.0);
  const double sandwich_violation =
      std::max(lower - min_eig(ops.M), max_eig(ops.M) - 1.0);

  const Eigen::MatrixXd msqrt = matrix_sqrt_psd(ops.M);
  const Eigen::MatrixXd Qinv =
      ops.chol_Q.solve(Eigen::MatrixXd::Identity(model.q, model.q));
  const Eigen::MatrixXd core = lambda[0] * msqrt * model.Z * Qinv *
                               model.Z.transpose() * msqrt;
  const Eigen::MatrixXd core_sym = 0.5 * (core + core.transpose());

  const Eigen::MatrixXd resid =
      Eigen::MatrixXd::Identity(n, n) -
      lambda[0] * model.Z * Qinv * model.Z.transpose() * ops.M;

  return {
      make_report("lemmaD1.sandwich", sandwich_violation, 0.0),
      make_report("lemmaD1.frobenius", ops.M.norm(), std::sqrt(double(n))),
      make_report("lemmaD2.operator", max_eig(core_sym), 1.0),
      make_report("lemmaD2.frobenius", core_sym.squaredNorm(), double(n)),
      make_report("lemmaD3.2", resid.squaredNorm(),
                  double(n) * n * (s2 * tau.tau.sum() + 1.0)),
  };
}

std::vector<BoundReport> run_bounds_suite(int n_instances, std::uint64_t seed,
                                          int mc_draws) {
  std::vector<BoundReport> all;
  Rng master(seed);
  for (int idx = 0; idx < n_instances; ++idx) {
    RandomInstance inst =
        make_random_instance(master.substream(idx).seed());
    Rng rng = master.substream(idx * 2 + 1000001);

    std::vector<BoundReport> batch;
    auto l1 = check_lemma1(inst.model, inst.tau, inst.lambda);
    batch.insert(batch.end(), l1.begin(), l1.end());
    batch.push_back(check_lemma2(inst.model, inst.tau, inst.lambda));

    // c* for this design: sampled sup of the lambda0-free norm, the tested
    // tau included so a flagged failure means a genuine bug
    double c_star = estimate_c_star(inst.model, 2000, rng) / 1.5;
    {
      Eigen::MatrixXd A = inst.model.X.transpose() * inst.model.X;
      A.diagonal() += inst.tau.tau.cwiseInverse();
      c_star = std::max(
          c_star,
          Eigen::LLT<Eigen::MatrixXd>(A)
              .solve(inst.model.X.transpose())
              .squaredNorm());
    }
    c_star *= 1.5;
    auto l3 = check_lemma3(inst.model, inst.tau, inst.lambda, c_star);
    batch.insert(batch.end(), l3.begin(), l3.end());

    batch.push_back(check_lemma4(inst.model, inst.tau, inst.lambda,
                                 inst.hyper.c, mc_draws, rng));
    auto l5 = check_lemma5(inst.model, inst.tau, inst.lambda);
    batch.insert(batch.end(), l5.begin(), l5.end());

    const double C = log_uniform(rng, 1e-2, 1e2);
    auto [M1, M2] = estimate_m1_m2(inst.hyper.c, inst.hyper.d);
    auto lg = check_gig_lemmas(inst.hyper, inst.state, C, M1, M2);
    batch.insert(batch.end(), lg.begin(), lg.end());

    auto lp = check_preliminaries(inst.model, inst.tau, inst.lambda);
    batch.insert(batch.end(), lp.begin(), lp.end());

    stamp(batch, inst);
    all.insert(all.end(), batch.begin(), batch.end());
  }
  return all;
}

std::vector<BoundsTableRow> summarize_bounds(
    const std::vector<BoundReport>& reports) {
  std::map<std::string, BoundsTableRow> rows;
  for (const auto& rep : reports) {
    auto& row = rows[rep.name];
    if (row.instances == 0) {
      row.name = rep.name;
      row.min_margin = rep.margin;
      row.passed = true;
    }
    row.instances += 1;
    row.min_margin = std::min(row.min_margin, rep.margin);
    row.passed = row.passed && rep.passed;
  }
  std::vector<BoundsTableRow> out;
  for (auto& [_, row] : rows) out.push_back(row);
  return out;
}

}  // namespace ngmm
